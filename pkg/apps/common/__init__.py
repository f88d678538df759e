# 各 app 共享的异常与检查记录
