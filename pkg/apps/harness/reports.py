"""
不等式报告与序列化

CSV 列固定为 [name, t, s, lhs, rhs, deficit, dim_term, ent_f, ent_g]，
浮点数以 17 位有效数字写出；JSON 用 repr 精度，读回逐位一致。
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from apps.common.exceptions import ConfigurationError, InputError
from apps.harness.tolerance import STATUS_PASS, classify_deficit

logger = logging.getLogger(__name__)

REPORT_MAIN = 'main_dimensional'
REPORT_VRS = 'vrs_limit'
REPORT_SIMPLE = 'simple_two_time'
REPORT_EKS = 'eks'

CSV_COLUMNS = ['name', 't', 's', 'lhs', 'rhs', 'deficit', 'dim_term', 'ent_f', 'ent_g']
FORMAT_JSON = 'json'
FORMAT_CSV = 'csv'
FORMATS = (FORMAT_JSON, FORMAT_CSV)
FLOAT_FORMAT = '%.17g'


@dataclass(frozen=True)
class ReportRow:
    t: float
    lhs: float
    rhs: float
    deficit: float
    s: Optional[float] = None
    dim_term: Optional[float] = None
    ent_f: Optional[float] = None
    ent_g: Optional[float] = None
    w2_t: Optional[float] = None

    @property
    def sort_key(self):
        return self.t, -1.0 if self.s is None else self.s


@dataclass
class InequalityReport:
    """
    Attributes:
        name: main_dimensional / vrs_limit / simple_two_time / eks
        params: 空间、Ψ 描述、m、R、分辨率、dt、光滑化 ε 等
        rows: 按时间排序的行
        summary: min_deficit、argmin、tolerance、status
        notes: 约定说明（如 EKS 在 s+t → 0 的取值、熵截断幅度）
        trajectories: 熵轨迹 {'u': [...], 'ent_f': [...], 'ent_g': [...]}
    """
    name: str
    params: Dict[str, Any]
    rows: List[ReportRow] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    trajectories: Dict[str, List[float]] = field(default_factory=dict)

    @property
    def status(self) -> str:
        return self.summary.get('status', classify(self))

    @property
    def min_deficit(self) -> Optional[float]:
        return self.summary.get('min_deficit')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'params': self.params,
            'rows': [asdict(row) for row in self.rows],
            'summary': self.summary,
            'notes': list(self.notes),
            'trajectories': self.trajectories,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'InequalityReport':
        names = {f.name for f in fields(ReportRow)}
        rows = [ReportRow(**{k: v for k, v in row.items() if k in names}) for row in data.get('rows', [])]
        return cls(
            name=data['name'],
            params=data.get('params', {}),
            rows=rows,
            summary=data.get('summary', {}),
            notes=list(data.get('notes', [])),
            trajectories=data.get('trajectories', {}),
        )


def build_report(
    name: str,
    params: Dict[str, Any],
    rows: List[ReportRow],
    tolerance: float,
    notes: Optional[List[str]] = None,
    trajectories: Optional[Dict[str, List[float]]] = None,
) -> InequalityReport:
    """排序、汇总并分级；容差内的负 deficit 逐行打 WARNING 日志"""
    rows = sorted(rows, key=lambda row: row.sort_key)
    summary: Dict[str, Any] = {'tolerance': tolerance, 'min_deficit': None, 'argmin_t': None, 'argmin_s': None}
    if rows:
        worst = min(rows, key=lambda row: row.deficit)
        summary.update({'min_deficit': worst.deficit, 'argmin_t': worst.t, 'argmin_s': worst.s})
    summary['status'] = classify_deficit(summary['min_deficit'], tolerance)

    for row in rows:
        if -tolerance <= row.deficit < 0:
            logger.warning('%s: negative deficit %.3e within tolerance at t=%s s=%s', name, row.deficit, row.t, row.s)

    report = InequalityReport(
        name=name,
        params=params,
        rows=rows,
        summary=summary,
        notes=list(notes or []),
        trajectories=trajectories or {},
    )
    log = logger.warning if summary['status'] != STATUS_PASS else logger.info
    log('%s: %s, min deficit %s (tol %.3e)', name, summary['status'], summary['min_deficit'], tolerance)
    return report


def classify(report: InequalityReport) -> str:
    """PASS / PASS_WITH_WARNING / FAIL"""
    deficits = [row.deficit for row in report.rows]
    tolerance = report.summary.get('tolerance', 0.0)
    return classify_deficit(min(deficits) if deficits else None, tolerance)


def _cell(value: Optional[float]) -> float:
    return math.nan if value is None else float(value)


def _optional(value: Any) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


def report_frame(report: InequalityReport) -> pd.DataFrame:
    records = [
        {
            'name': report.name,
            't': _cell(row.t),
            's': _cell(row.s),
            'lhs': _cell(row.lhs),
            'rhs': _cell(row.rhs),
            'deficit': _cell(row.deficit),
            'dim_term': _cell(row.dim_term),
            'ent_f': _cell(row.ent_f),
            'ent_g': _cell(row.ent_g),
        }
        for row in report.rows
    ]
    return pd.DataFrame.from_records(records, columns=CSV_COLUMNS)


def emit_report(report: InequalityReport, format: str, path: Union[str, Path]):
    """写出报告；IO 失败时报告路径"""
    if format not in FORMATS:
        raise ConfigurationError(f'unknown report format {format!r}; expected one of {FORMATS}')
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if format == FORMAT_CSV:
            report_frame(report).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        else:
            path.write_text(json.dumps(report.to_dict(), indent=2, ensure_ascii=False), encoding='utf-8')
    except OSError as exc:
        raise InputError(f'cannot write report {path}: {exc}') from exc


def load_report(path: Union[str, Path], format: Optional[str] = None) -> InequalityReport:
    """读回 emit_report 的输出；CSV 只包含行，汇总按行重新计算（容差记为 0）"""
    path = Path(path)
    format = format or path.suffix.lstrip('.').lower()
    if format not in FORMATS:
        raise ConfigurationError(f'unknown report format {format!r}; expected one of {FORMATS}')

    try:
        if format == FORMAT_JSON:
            return InequalityReport.from_dict(json.loads(path.read_text(encoding='utf-8')))
        frame = pd.read_csv(path, float_precision='round_trip', dtype={'name': str})
    except (OSError, ValueError, KeyError, pd.errors.ParserError) as exc:
        raise InputError(f'cannot read report {path}: {exc}') from exc

    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise InputError(f'{path}: missing columns {missing}')

    rows = [
        ReportRow(
            t=float(record['t']),
            s=_optional(record['s']),
            lhs=float(record['lhs']),
            rhs=float(record['rhs']),
            deficit=float(record['deficit']),
            dim_term=_optional(record['dim_term']),
            ent_f=_optional(record['ent_f']),
            ent_g=_optional(record['ent_g']),
        )
        for record in frame.to_dict('records')
    ]
    name = str(frame['name'].iloc[0]) if len(frame) else ''
    deficits = np.array([row.deficit for row in rows])
    summary = {
        'tolerance': 0.0,
        'min_deficit': float(deficits.min()) if deficits.size else None,
    }
    summary['status'] = classify_deficit(summary['min_deficit'], 0.0)
    return InequalityReport(name=name, params={}, rows=rows, summary=summary)
