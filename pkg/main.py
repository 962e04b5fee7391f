"""
受限本征值位移命令行工具

子命令：validate / shift / sweep / hydrogen / oracle
退出码：0 成功，2 参数或假设不合法，3 数值求解失败
"""

import argparse
import logging
import re
import sys
from typing import Any, Dict, List, Optional, Sequence

from config import ExperimentConfig
from src import __version__
from src.exceptions import ParseError, SolverError, ValidationError
from src.pipeline import (
    HYDROGEN_DIRECT,
    HYDROGEN_OSCILLATOR,
    STATUS_UNRESOLVED,
    ShiftPipeline,
    ShiftReport,
    SolverSettings,
    empirical_order,
    reports_to_csv,
    reports_to_json,
)
from src.potentials import LINE, RADIAL, resolve_potential, validate_potential
from src.shooting import FROZEN, REFRESHED, ModeSpec
from utils import build_domain, format_table, parse_h_grid, parse_number_list

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

REPORT_COLUMNS = ("h", "lambda0", "lambda_confined", "numeric_shift", "predicted_shift", "ratio", "status")
HYDROGEN_COLUMNS = ("R", "lambda0", "lambda_confined", "numeric_shift", "predicted_shift", "ratio", "status")

# 取值以 "-" 开头的选项（如 --domain -1,1）需要写成 --domain=-1,1 才能被 argparse 接受
_VALUE_OPTIONS = ("--domain", "--h-grid", "--R-grid")
_NEGATIVE_VALUE = re.compile(r"^-[\d.]")


def join_negative_values(argv: Sequence[str]) -> List[str]:
    joined: List[str] = []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg in _VALUE_OPTIONS and i + 1 < len(argv) and _NEGATIVE_VALUE.match(argv[i + 1]):
            joined.append(f"{arg}={argv[i + 1]}")
            i += 2
            continue
        joined.append(arg)
        i += 1
    return joined


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML 或 JSON 配置文件")
    parser.add_argument("--verbose", action="store_true", help="输出调试日志")
    parser.add_argument("--json", dest="json_out", help="JSON 输出路径")
    parser.add_argument("--csv", dest="csv_out", help="CSV 输出路径")


def _add_problem(parser: argparse.ArgumentParser, with_h: bool = True):
    parser.add_argument("--potential", "--potential-expr", dest="potential",
                        help="内置名称或表达式，如 harmonic、quartic(1)、\"x^2+x^4\"")
    parser.add_argument("--kind", choices=[LINE, RADIAL], help="直线或径向问题")
    parser.add_argument("--domain", help="直线区间 a,b（a < 0 < b）")
    parser.add_argument("--box", type=float, help="径向盒子 L")
    parser.add_argument("--m", type=int, help="量子数 m ≥ 0")
    parser.add_argument("--nu", type=float, help="径向参数 ν > 0")
    if with_h:
        parser.add_argument("--h", type=float, help="半经典参数 h > 0")
    parser.add_argument("--newton", choices=[REFRESHED, FROZEN], help="Newton 迭代变体")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confined-shift", description="受限半经典本征值与位移渐近对照")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", help="检查势函数是否满足假设")
    _add_common(validate)
    _add_problem(validate, with_h=False)

    shift = sub.add_parser("shift", help="单个问题的位移对照")
    _add_common(shift)
    _add_problem(shift)
    shift.add_argument("--oracle", action="store_true", default=None, help="附带有限差分校验值")
    shift.add_argument("--grid-n", type=int, help="有限差分网格")

    sweep = sub.add_parser("sweep", help="h 网格扫描")
    _add_common(sweep)
    _add_problem(sweep, with_h=False)
    sweep.add_argument("--h-grid", help="几何网格 start,stop,count")
    sweep.add_argument("--jobs", type=int, help="并发行数")

    hydrogen = sub.add_parser("hydrogen", help="受限氢原子的 R 序列")
    _add_common(hydrogen)
    hydrogen.add_argument("--n", type=int)
    hydrogen.add_argument("--ell", type=int)
    hydrogen.add_argument("--Z", type=float)
    hydrogen.add_argument("--h", type=float)
    hydrogen.add_argument("--R-grid", dest="R_grid", help="半径列表 R1,R2,...")
    hydrogen.add_argument("--route", choices=[HYDROGEN_DIRECT, HYDROGEN_OSCILLATOR], default=HYDROGEN_DIRECT)
    hydrogen.add_argument("--jobs", type=int, help="并发行数")

    oracle = sub.add_parser("oracle", help="打靶与有限差分对照")
    _add_common(oracle)
    _add_problem(oracle)
    oracle.add_argument("--grid-n", type=int, help="有限差分网格")
    oracle.add_argument("--count", type=int, help="对照的本征值个数")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """命令行参数对应的配置覆盖项，未给出的参数为 None"""
    get = lambda name: getattr(args, name, None)  # noqa: E731
    return {
        'potential': {'spec': get('potential'), 'kind': get('kind')},
        'domain': {'interval': get('domain'), 'box': get('box')},
        'mode': {'m': get('m'), 'nu': get('nu'), 'h': get('h')},
        'solver': {'newton': get('newton')},
        'oracle': {'enabled': get('oracle'), 'grid_n': get('grid_n'), 'count': get('count')},
        'sweep': {'h_grid': get('h_grid'), 'jobs': get('jobs')},
        'hydrogen': {'n': get('n'), 'ell': get('ell'), 'Z': get('Z'), 'h': get('h'), 'R_grid': get('R_grid')},
        'output': {'json': get('json_out'), 'csv': get('csv_out')},
    }


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.load_file(args.config) if args.config else ExperimentConfig()
    return config.merge(_overrides(args))


def setup_logging(config: ExperimentConfig, verbose: bool):
    level = "DEBUG" if verbose else str(config.section('debug')['log_level']).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def _require(section: Dict[str, Any], key: str, flag: str):
    if section.get(key) is None:
        raise ValidationError(f"缺少参数 {flag}")
    return section[key]


def _problem(config: ExperimentConfig):
    """由配置构造 (势函数, 区间)，给出 --box 而未指定类型时按径向处理"""
    potential = config.section('potential')
    domain = config.section('domain')
    kind = potential['kind']
    if domain['box'] is not None and domain['interval'] is None:
        kind = RADIAL
    p = resolve_potential(str(potential['spec']), kind=kind)
    return p, build_domain(p.kind, domain['interval'], domain['box'])


def _mode(config: ExperimentConfig, radial: bool, h: Optional[float] = None) -> ModeSpec:
    mode = config.section('mode')
    m = _require(mode, 'm', '--m')
    nu = _require(mode, 'nu', '--nu') if radial else None
    if h is None:
        h = _require(mode, 'h', '--h')
    return ModeSpec(int(m), float(h), None if nu is None else float(nu))


def _pipeline(config: ExperimentConfig) -> ShiftPipeline:
    return ShiftPipeline(SolverSettings.from_config(config.section('solver')))


def _write_outputs(config: ExperimentConfig, reports: List[ShiftReport], command: str,
                   summary: Optional[Dict[str, Any]] = None):
    output = config.section('output')
    if output['json']:
        with open(output['json'], 'w', encoding='utf-8') as f:
            f.write(reports_to_json(reports, command, summary))
        print(f"📄 JSON 已写入：{output['json']}")
    if output['csv']:
        with open(output['csv'], 'w', encoding='utf-8', newline='') as f:
            f.write(reports_to_csv(reports))
        print(f"📄 CSV 已写入：{output['csv']}")


def cmd_validate(config: ExperimentConfig) -> int:
    p, domain = _problem(config)
    report = validate_potential(p, domain)
    print(f"势函数：{p.describe()}")
    print(f"区间：{domain.describe()}")
    print(report.summary())
    if not report.passed:
        print("❌ 势函数不满足假设", file=sys.stderr)
        return EXIT_VALIDATION
    print("✅ 势函数满足全部假设")
    return EXIT_OK


def cmd_shift(config: ExperimentConfig) -> int:
    p, domain = _problem(config)
    mode = _mode(config, p.kind == RADIAL)
    oracle = config.section('oracle')
    report = _pipeline(config).run_case(p, domain, mode, oracle=bool(oracle['enabled']),
                                        grid_n=int(oracle['grid_n']))
    rows = [report.to_dict()]
    columns = REPORT_COLUMNS + (("oracle_value",) if report.oracle_value is not None else ())
    print(format_table(rows, columns))
    _write_outputs(config, [report], "shift")
    print("✅ 计算完成")
    return EXIT_OK


def _report_series(reports: List[ShiftReport], x_values: Sequence[float]) -> Optional[float]:
    ok = [(x, r.ratio) for x, r in zip(x_values, reports) if r.ok]
    for r in reports:
        if not r.ok:
            print(f"⚠️ {r.status}", file=sys.stderr)
    if not ok:
        return None
    return empirical_order([x for x, _ in ok], [ratio for _, ratio in ok])


def _row_counts(reports: List[ShiftReport]) -> Dict[str, int]:
    return {"failed_rows": sum(1 for r in reports if r.failed),
            "unresolved_rows": sum(1 for r in reports if r.status == STATUS_UNRESOLVED)}


def cmd_sweep(config: ExperimentConfig) -> int:
    p, domain = _problem(config)
    sweep = config.section('sweep')
    grid = parse_h_grid(_require(sweep, 'h_grid', '--h-grid'))
    mode = _mode(config, p.kind == RADIAL, h=grid[0])
    reports = _pipeline(config).run_sweep(p, domain, mode, grid, jobs=int(sweep['jobs']))
    print(format_table([r.to_dict() for r in reports], REPORT_COLUMNS))
    order = _report_series(reports, grid)
    summary = dict(empirical_order=order, **_row_counts(reports))
    if order is not None:
        print(f"经验阶数（log|ratio−1| 对 log h 的斜率）：{order:.4f}")
    _write_outputs(config, reports, "sweep", summary)
    if not any(r.ok for r in reports):
        print("❌ 没有可用的行（全部失败或位移不可分辨）", file=sys.stderr)
        return EXIT_SOLVER
    print("✅ 扫描完成")
    return EXIT_OK


def cmd_hydrogen(config: ExperimentConfig, route: str = HYDROGEN_DIRECT) -> int:
    section = config.section('hydrogen')
    n = int(_require(section, 'n', '--n'))
    ell = int(_require(section, 'ell', '--ell'))
    Z = float(_require(section, 'Z', '--Z'))
    h = float(_require(section, 'h', '--h'))
    R_grid = parse_number_list(_require(section, 'R_grid', '--R-grid'), "--R-grid")
    if ell < 0 or n < ell + 1:
        raise ValidationError(f"需要 n ≥ ell + 1，实际 n = {n}, ell = {ell}")
    reports = _pipeline(config).run_hydrogen(n, ell, Z, h, R_grid,
                                             jobs=int(config.section('sweep')['jobs']), route=route)
    rows = [dict(r.to_dict(), R=r.domain[1]) for r in reports]
    print(format_table(rows, HYDROGEN_COLUMNS))
    # 相对误差按 h²/R 衰减，对 1/R 拟合阶数
    order = _report_series(reports, [1.0 / R for R in R_grid])
    summary = dict(empirical_order_in_inverse_R=order, route=route, **_row_counts(reports))
    _write_outputs(config, reports, "hydrogen", summary)
    if not any(r.ok for r in reports):
        print("❌ 没有可用的行（全部失败或位移不可分辨）", file=sys.stderr)
        return EXIT_SOLVER
    print("✅ 计算完成")
    return EXIT_OK


def cmd_oracle(config: ExperimentConfig) -> int:
    p, domain = _problem(config)
    mode_section = config.section('mode')
    if mode_section['m'] is None:
        mode_section['m'] = 0
    mode = _mode(config, p.kind == RADIAL)
    oracle = config.section('oracle')
    rows = _pipeline(config).oracle_table(p, domain, mode, grid_n=int(oracle['grid_n']),
                                          count=int(oracle['count']))
    print(format_table(rows, ("m", "shooting", "oracle", "relative_difference", "reduced_accuracy")))
    print("✅ 对照完成")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = join_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_VALIDATION

    try:
        config = load_config(args)
        setup_logging(config, args.verbose)
        logger.debug("生效配置:\n%s", config.dump())
        if args.command == "validate":
            return cmd_validate(config)
        if args.command == "shift":
            return cmd_shift(config)
        if args.command == "sweep":
            return cmd_sweep(config)
        if args.command == "hydrogen":
            return cmd_hydrogen(config, args.route)
        return cmd_oracle(config)
    except ValidationError as e:
        detail = e.caret() if isinstance(e, ParseError) else str(e)
        print(f"❌ 参数错误：{detail}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as e:
        print(f"❌ 数值求解失败：{e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
