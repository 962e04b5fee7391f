"""
位移计算管道
把受限本征值、无约束本征值和渐近公式串起来，提供单例、h 扫描、氢原子 R 序列
和有限差分对照四种运行方式，以及 CSV / JSON 输出
"""

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from . import __version__
from . import asymptotics, shooting, spectra
from .exceptions import ConfinedShiftError, ValidationError, solver_boundary
from .potentials import ConfinementDomain, PotentialSpec, validate_potential
from .shooting import ModeSpec

logger = logging.getLogger(__name__)

CSV_HEADER = ("h", "lambda0", "lambda_confined", "numeric_shift", "predicted_shift",
              "ratio", "log_numeric", "log_predicted", "status")
STATUS_OK = "ok"
STATUS_UNRESOLVED = "unresolved"
STATUS_FAILED = "failed"
HYDROGEN_DIRECT = "direct"
HYDROGEN_OSCILLATOR = "oscillator"


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class ShiftReport:
    """数值位移与领头阶预测的对照

    非有限值（下溢后的 log、无意义的比值）一律存为 None，保证 JSON 往返逐字段相等。
    """

    potential: str
    kind: str
    domain: Tuple[float, float]
    m: int
    nu: Optional[float]
    h: float
    lambda0: Optional[float] = None
    lambda_confined: Optional[float] = None
    numeric_shift: Optional[float] = None
    log_numeric: Optional[float] = None
    predicted_shift: Optional[float] = None
    log_predicted: Optional[float] = None
    ratio: Optional[float] = None
    iterations: Optional[int] = None
    steps: Optional[int] = None
    oracle_value: Optional[float] = None
    status: str = STATUS_OK

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    @property
    def failed(self) -> bool:
        return self.status.startswith(STATUS_FAILED)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["domain"] = list(self.domain)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ShiftReport":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"报告中存在未知字段: {sorted(unknown)}")
        values = dict(data)
        values["domain"] = tuple(float(v) for v in values["domain"])
        return cls(**values)

    def csv_row(self) -> List[str]:
        return [_format_number(getattr(self, name)) for name in CSV_HEADER[:-1]] + [self.status]


def _format_number(value: Optional[float]) -> str:
    """repr 给出最短的可精确还原的十进制表示"""
    if value is None:
        return ""
    return repr(float(value))


def compare_shift(numeric: float, prediction: asymptotics.ShiftPrediction) -> Dict[str, Optional[float]]:
    """数值位移与预测的比值，在对数域计算以避开预测值下溢"""
    log_numeric = math.log(numeric) if numeric > 0 else None
    ratio = None
    if log_numeric is not None:
        gap = log_numeric - prediction.log_value
        ratio = math.exp(gap) if gap < 709.0 else None
    else:
        logger.warning("数值位移 %r 不为正，可能已低于本征值求解精度", numeric)
    return {
        "numeric_shift": _finite_or_none(numeric),
        "log_numeric": log_numeric,
        "predicted_shift": _finite_or_none(prediction.leading_value),
        "log_predicted": _finite_or_none(prediction.log_value),
        "ratio": ratio,
    }


def shift_status(numeric: float, reference: float, h: float,
                 resolution: float = shooting.DEFAULT_INTEGRATE_TOL) -> str:
    """位移不超过 resolution·max(|λ⁰|, h) 时记为 unresolved，此时比值只反映求解噪声"""
    floor = resolution * max(abs(reference), h)
    if numeric > floor:
        return STATUS_OK
    logger.warning("数值位移 %r 低于本征值分辨率 %.3e，记为 %s", numeric, floor, STATUS_UNRESOLVED)
    return STATUS_UNRESOLVED


def empirical_order(h_values: Sequence[float], ratios: Sequence[Optional[float]]) -> Optional[float]:
    """log|ratio − 1| 对 log h 的最小二乘斜率，可用点少于两个时返回 None"""
    points = [(math.log(h), math.log(abs(r - 1.0)))
              for h, r in zip(h_values, ratios) if r is not None and r != 1.0 and h > 0]
    if len(points) < 2:
        return None
    xs, ys = np.array(points).T
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def geometric_grid(start: float, stop: float, count: int) -> List[float]:
    """从 start 到 stop 的几何网格（含两端）"""
    if count < 1:
        raise ValidationError(f"网格点数至少为 1，实际为 {count}")
    if start <= 0 or stop <= 0:
        raise ValidationError(f"几何网格的端点必须为正: {start}, {stop}")
    if count == 1:
        return [float(start)]
    return [float(v) for v in np.geomspace(start, stop, count)]


@dataclass(frozen=True)
class SolverSettings:
    """求解参数，对应配置文件的 solver 段"""

    integrate_tol: float = shooting.DEFAULT_INTEGRATE_TOL
    newton_tol: float = shooting.DEFAULT_NEWTON_TOL
    newton: str = shooting.REFRESHED
    max_iterations: int = shooting.DEFAULT_MAX_ITERATIONS
    condition_limit: float = shooting.DEFAULT_CONDITION_LIMIT

    @classmethod
    def from_config(cls, section: Optional[Dict[str, Any]]) -> "SolverSettings":
        section = section or {}
        return cls(**{f.name: section[f.name] for f in fields(cls) if section.get(f.name) is not None})


@dataclass
class ShiftPipeline:
    """位移计算管道

    Attributes:
        settings: 求解参数
        show_progress: 批量运行时是否显示 tqdm 进度条
    """

    settings: SolverSettings = field(default_factory=SolverSettings)
    show_progress: bool = True

    def _confined(self, p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec) -> spectra.Eigenpair:
        s = self.settings
        return spectra.confined_eigenvalue(p, domain, mode, s.integrate_tol, s.newton_tol,
                                           s.newton, s.max_iterations, s.condition_limit)

    def _unconfined(self, p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec) -> spectra.Eigenpair:
        s = self.settings
        return spectra.unconfined_eigenvalue(p, mode, reference=domain, integrate_tol=s.integrate_tol,
                                             newton_tol=s.newton_tol, variant=s.newton)

    def check(self, p: PotentialSpec, domain: ConfinementDomain):
        """势函数假设不满足时抛出 ValidationError"""
        report = validate_potential(p, domain)
        if not report.passed:
            raise ValidationError(f"势函数不满足假设:\n{report.summary()}")
        return report

    @solver_boundary
    def run_case(self, p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec,
                 oracle: bool = False, grid_n: int = 2000) -> ShiftReport:
        """单个 (V, Ω, m, h) 的位移对照

        Args:
            p: 势函数
            domain: 受限区间或径向盒子
            mode: 模式
            oracle: 是否附带有限差分校验值
            grid_n: 有限差分网格

        Returns:
            ShiftReport: 对照结果

        Raises:
            ValidationError: 势函数或参数不合法
            SolverError: 数值求解失败
        """
        self.check(p, domain)
        confined = self._confined(p, domain, mode)
        unconfined = self._unconfined(p, domain, mode)
        prediction = asymptotics.shift_leading(p, domain, mode)
        oracle_value = None
        if oracle:
            levels = spectra.fd_oracle(p, domain, mode, grid_n=grid_n, count=mode.m + 1)
            oracle_value = levels[mode.m].value
        numeric = confined.value - unconfined.value
        comparison = compare_shift(numeric, prediction)
        status = shift_status(numeric, unconfined.value, mode.h, self.settings.integrate_tol)
        logger.debug("h = %r: λ^Ω = %r, λ⁰ = %r, 比值 = %r", mode.h, confined.value,
                     unconfined.value, comparison["ratio"])
        return ShiftReport(
            potential=p.name, kind=p.kind, domain=(domain.r_minus, domain.r_plus),
            m=mode.m, nu=mode.nu, h=mode.h,
            lambda0=unconfined.value, lambda_confined=confined.value,
            iterations=confined.diagnostics.get("iterations"),
            steps=confined.diagnostics.get("steps"),
            oracle_value=oracle_value, status=status, **comparison,
        )

    def _failed(self, template: ShiftReport, error: Exception) -> ShiftReport:
        return replace(template, status=f"{STATUS_FAILED}: {error}")

    def _run_rows(self, jobs_args: List[Tuple], worker, templates: List[ShiftReport],
                  jobs: int, desc: str) -> List[ShiftReport]:
        """逐行运行，失败的行记录状态后继续；结果按输入顺序返回"""
        if jobs < 1:
            raise ValidationError(f"jobs 至少为 1，实际为 {jobs}")

        def guarded(index: int) -> ShiftReport:
            try:
                return worker(*jobs_args[index])
            except ConfinedShiftError as e:
                logger.warning("第 %d 行失败: %s", index + 1, e)
                return self._failed(templates[index], e)

        indices = range(len(jobs_args))
        progress = tqdm(total=len(jobs_args), desc=desc, disable=not self.show_progress)
        try:
            if jobs == 1:
                results = []
                for i in indices:
                    results.append(guarded(i))
                    progress.update(1)
            else:
                with ThreadPoolExecutor(max_workers=jobs) as executor:
                    futures = [executor.submit(guarded, i) for i in indices]
                    for future in futures:
                        future.add_done_callback(lambda _: progress.update(1))
                    results = [future.result() for future in futures]
        finally:
            progress.close()
        failed = sum(1 for r in results if r.failed)
        unresolved = sum(1 for r in results if r.status == STATUS_UNRESOLVED)
        logger.info("%s完成: %d 行，失败 %d 行，位移不可分辨 %d 行", desc, len(results), failed, unresolved)
        return results

    def run_sweep(self, p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec,
                  h_grid: Sequence[float], jobs: int = 1) -> List[ShiftReport]:
        """对 h 网格逐点运行 run_case"""
        if len(h_grid) == 0:
            raise ValidationError("h 网格为空")
        self.check(p, domain)
        modes = [mode.with_h(h) for h in h_grid]
        templates = [ShiftReport(p.name, p.kind, (domain.r_minus, domain.r_plus), m.m, m.nu, m.h)
                     for m in modes]
        args = [(p, domain, m) for m in modes]
        return self._run_rows(args, self.run_case, templates, jobs, "h 扫描")

    @solver_boundary
    def run_hydrogen_point(self, spec: spectra.HydrogenSpec, route: str = HYDROGEN_DIRECT) -> ShiftReport:
        """route 为 direct 时直接对库仑方程打靶，为 oscillator 时走谐振子不动点"""
        s = self.settings
        if route == HYDROGEN_DIRECT:
            pair = spectra.hydrogen_confined(spec, s.integrate_tol, s.newton_tol, s.newton)
        elif route == HYDROGEN_OSCILLATOR:
            pair = spectra.hydrogen_via_oscillator(spec, integrate_tol=s.integrate_tol, newton_tol=s.newton_tol)
        else:
            raise ValidationError(f"未知的氢原子求解路线: {route}")
        prediction = asymptotics.hydrogen_shift(spec.n, spec.ell, spec.Z, spec.h, spec.R)
        numeric = pair.value - spec.unconfined_energy
        comparison = compare_shift(numeric, prediction)
        status = shift_status(numeric, spec.unconfined_energy, spec.h, self.settings.integrate_tol)
        return ShiftReport(
            potential=_hydrogen_label(spec), kind="hydrogen", domain=(0.0, spec.R),
            m=spec.radial_index, nu=None, h=spec.h,
            lambda0=spec.unconfined_energy, lambda_confined=pair.value,
            iterations=pair.diagnostics.get("iterations"), steps=pair.diagnostics.get("steps"),
            status=status, **comparison,
        )

    def run_hydrogen(self, n: int, ell: int, Z: float, h: float, R_grid: Sequence[float],
                     jobs: int = 1, route: str = HYDROGEN_DIRECT) -> List[ShiftReport]:
        """受限氢原子的 R 序列，数值 E_n(R) 对照闭式位移"""
        if len(R_grid) == 0:
            raise ValidationError("R 网格为空")
        specs = [spectra.HydrogenSpec(n, ell, Z, h, R) for R in R_grid]
        templates = [ShiftReport(_hydrogen_label(s), "hydrogen", (0.0, s.R), s.radial_index, None, h)
                     for s in specs]
        return self._run_rows([(s, route) for s in specs], self.run_hydrogen_point, templates, jobs, "氢原子序列")

    @solver_boundary
    def oracle_table(self, p: PotentialSpec, domain: ConfinementDomain, mode: ModeSpec,
                     grid_n: int = 2000, count: int = 3) -> List[Dict[str, Any]]:
        """打靶与有限差分外推的前 count 个本征值对照"""
        self.check(p, domain)
        levels = spectra.fd_oracle(p, domain, mode, grid_n=grid_n, count=count)
        rows = []
        for level in levels:
            shot = self._confined(p, domain, replace(mode, m=level.index_m))
            rows.append({
                "m": level.index_m,
                "shooting": shot.value,
                "oracle": level.value,
                "relative_difference": abs(shot.value - level.value) / abs(level.value),
                "reduced_accuracy": level.diagnostics["reduced_accuracy"],
            })
        return rows


def _hydrogen_label(spec: spectra.HydrogenSpec) -> str:
    return f"hydrogen(n={spec.n}, ell={spec.ell}, Z={spec.Z!r})"


# ---------------------------------------------------------------------------
# 输出
# ---------------------------------------------------------------------------

def reports_to_csv(reports: Sequence[ShiftReport]) -> str:
    """固定表头的 CSV 文本（RFC 4180 引号规则，\\r\\n 换行）"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for report in reports:
        writer.writerow(report.csv_row())
    return buffer.getvalue()


def reports_to_json(reports: Sequence[ShiftReport], command: str,
                    summary: Optional[Dict[str, Any]] = None) -> str:
    """一次运行一个 JSON 文档，结构见 docs/report_schema.md"""
    document = {
        "version": __version__,
        "command": command,
        "reports": [r.to_dict() for r in reports],
        "summary": summary or {},
    }
    return json.dumps(document, ensure_ascii=False, indent=2, allow_nan=False)


def reports_from_json(text: str) -> List[ShiftReport]:
    document = json.loads(text)
    if "reports" not in document:
        raise ValidationError("JSON 文档缺少 reports 字段")
    return [ShiftReport.from_dict(item) for item in document["reports"]]
