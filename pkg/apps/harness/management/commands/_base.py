"""
管理命令公共部分

所有命令都接受 --config / --out / --format / --seed；检查类命令另有 --archive。
LabError 统一转换为 CommandError（退出码 1），不等式 FAIL 为 CommandError(returncode=2)。
"""
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from django.core.management.base import BaseCommand, CommandError

from apps.common.exceptions import InputError, LabError
from apps.harness.config import LabConfig, load_config
from apps.harness.models import VerificationRun
from apps.harness.reports import FLOAT_FORMAT, FORMAT_CSV, FORMAT_JSON, FORMATS, InequalityReport, emit_report
from apps.harness.tolerance import STATUS_FAIL, STATUS_WARNING

logger = logging.getLogger(__name__)


class LabCommand(BaseCommand):
    archivable = False

    def create_parser(self, prog_name, subcommand, **kwargs):
        """参数错误按用法错误处理，退出码 1"""
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        def error(message):
            if parser.called_from_command_line:
                parser.print_usage(sys.stderr)
                parser.exit(1, f'{parser.prog}: error: {message}\n')
            raise CommandError(f'Error: {message}', returncode=1)

        parser.error = error
        return parser

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            type=str,
            required=True,
            help='实验配置 JSON 文件'
        )
        parser.add_argument(
            '--out',
            type=str,
            help='输出文件（缺省时打印到标准输出）'
        )
        parser.add_argument(
            '--format',
            type=str,
            default=FORMAT_JSON,
            choices=list(FORMATS),
            help='输出格式: json 或 csv'
        )
        parser.add_argument(
            '--seed',
            type=int,
            default=0,
            help='随机测试场的种子'
        )
        if self.archivable:
            parser.add_argument(
                '--archive',
                action='store_true',
                help='把报告保存到数据库 (VerificationRun)'
            )

    def handle(self, *args, **options):
        try:
            config = load_config(options['config'])
            self.rng = np.random.default_rng(options['seed'])
            self.run(config, options)
        except LabError as e:
            self.stdout.write(self.style.ERROR(f'错误: {e}'))
            raise CommandError(str(e)) from e

    def run(self, config: LabConfig, options: Dict[str, Any]):
        raise NotImplementedError

    def write_payload(self, payload: Dict[str, Any], options: Dict[str, Any], table: Optional[pd.DataFrame] = None):
        """json 输出 payload；csv 输出 table（缺省为 payload 的单行表）"""
        out, format = options.get('out'), options['format']
        if format == FORMAT_CSV:
            frame = table if table is not None else pd.json_normalize(payload)
            text = frame.to_csv(index=False, float_format=FLOAT_FORMAT)
        else:
            text = json.dumps(payload, indent=2, ensure_ascii=False)

        if not out:
            self.stdout.write(text)
            return
        path = Path(out)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding='utf-8')
        except OSError as exc:
            raise InputError(f'cannot write {path}: {exc}') from exc
        self.stdout.write(self.style.SUCCESS(f'已写出 {path}'))

    def finish_report(self, report: InequalityReport, options: Dict[str, Any]):
        """输出报告、按需归档，并按结果设置退出码"""
        if options.get('out'):
            emit_report(report, options['format'], options['out'])
            self.stdout.write(self.style.SUCCESS(f"报告已写出 {options['out']}"))
        else:
            self.write_payload(report.to_dict(), options)

        if options.get('archive'):
            run = archive_report(report)
            self.stdout.write(f'已归档: {run}')

        summary = report.summary
        message = f"{report.name}: {summary['status']}，最小 deficit {summary['min_deficit']}（容差 {summary['tolerance']:.3e}）"
        if summary['status'] == STATUS_FAIL:
            self.stdout.write(self.style.ERROR(message))
            raise CommandError(message, returncode=2)
        if summary['status'] == STATUS_WARNING:
            self.stdout.write(self.style.WARNING(message))
        else:
            self.stdout.write(self.style.SUCCESS(message))


def archive_report(report: InequalityReport) -> VerificationRun:
    summary = report.summary
    return VerificationRun.objects.create(
        name=report.name,
        space_kind=report.params.get('space', ''),
        status=summary['status'],
        min_deficit=summary.get('min_deficit'),
        tolerance=summary.get('tolerance'),
        params=report.params,
        payload=report.to_dict(),
    )


def setup(config: LabConfig):
    """(space, Ψ, μ)"""
    space = config.space()
    w = config.weight(space)
    return space, w, config.measure(space, w)
