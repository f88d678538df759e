"""
Django settings for the contraction lab project.
"""
import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-change-this-in-production')

DEBUG = os.getenv('DJANGO_DEBUG', 'true').lower() == 'true'

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'apps.geometry',
    'apps.semigroup',
    'apps.forms',
    'apps.transport',
    'apps.harness',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'config.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'config.wsgi.application'

# 数据库配置
# 默认 SQLite，只用于归档验证结果（VerificationRun）
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

# 如果设置了环境变量，使用 PostgreSQL
if os.getenv('USE_POSTGRESQL', '').lower() == 'true':
    DATABASES['default'] = {
        'ENGINE': 'django.db.backends.postgresql',
        'NAME': os.getenv('DB_NAME', 'contraction_lab'),
        'USER': os.getenv('DB_USER', 'postgres'),
        'PASSWORD': os.getenv('DB_PASSWORD', ''),
        'HOST': os.getenv('DB_HOST', 'localhost'),
        'PORT': os.getenv('DB_PORT', '5432'),
        'OPTIONS': {
            'connect_timeout': 10,
        },
    }

CACHES = {
    'default': {
        'BACKEND': 'django.core.cache.backends.locmem.LocMemCache',
    }
}

AUTH_PASSWORD_VALIDATORS = []

LANGUAGE_CODE = 'zh-hans'
TIME_ZONE = 'Asia/Shanghai'
USE_I18N = True
USE_TZ = True

STATIC_URL = 'static/'
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# ---------------------------------------------------------------------------
# 数值实验配置
# ---------------------------------------------------------------------------

# 每个坐标轴的最少网格点数
LAB_MIN_RESOLUTION = int(os.getenv('LAB_MIN_RESOLUTION', 16))

# 密度下界（ε-平滑之后），熵计算前的截断值
LAB_DENSITY_FLOOR = float(os.getenv('LAB_DENSITY_FLOOR', 1e-10))

# 密度归一化容差：|∫ρ dμ − 1|
LAB_MASS_TOL = 1e-10

# f_ε = (P_ε f + ε)/(1+ε) 中的 ε
LAB_SMOOTHING_EPSILON = float(os.getenv('LAB_SMOOTHING_EPSILON', 1e-4))

# Crank–Nicolson 出现负值时最多减半步长的次数
LAB_POSITIVITY_MAX_HALVINGS = 6

LAB_SINKHORN = {
    'eps_start': 0.5,
    'eps_stop': 0.002,
    'stages': 8,
    'max_iter': int(os.getenv('LAB_SINKHORN_MAX_ITER', 20000)),
    'marginal_tol': 1e-8,
    # 球面 Sinkhorn 提升到 S² 时的经度格点数
    'sphere_lon_resolution': 64,
}

# 纬向单调重排 vs 粗网格 S² Sinkhorn 的交叉验证
LAB_ZONAL_CROSSCHECK = {
    'lat_resolution': 32,
    'lon_resolution': 64,
    'tol': 3e-2,
}

# BBPath 连续性方程残差的默认容差
LAB_BB_CONTINUITY_TOL = float(os.getenv('LAB_BB_CONTINUITY_TOL', 5e-2))

# 全局容差模型 tol = c_h·h² + c_dt·dt² + c_u/u_points + w2_solver_tol
# 常数由圆周基线的 h 加密校准后固定
LAB_TOLERANCE = {
    'c_h': 2.0,
    'c_dt': 1.0,
    'c_u': 1e-3,
    'w2_solver_tol': 1e-6,
    'sinkhorn_solver_tol': 5e-3,
}

# ΔEnt(u) 积分默认 u 点数
LAB_U_POINTS = 33

# 代价矩阵缓存（二进制文件，带版本头）
LAB_COST_CACHE = {
    'enabled': os.getenv('LAB_COST_CACHE_ENABLED', 'true').lower() == 'true',
    # 缺省放在用户缓存目录，不写进项目目录
    'dir': Path(os.getenv(
        'LAB_COST_CACHE_DIR',
        Path(os.getenv('XDG_CACHE_HOME', Path.home() / '.cache')) / 'contractionlab' / 'cost_cache',
    )),
    'version': 1,
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} [{levelname}] {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'apps': {
            'handlers': ['console'],
            'level': os.getenv('LAB_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
