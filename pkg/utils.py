"""
命令行与界面共用的工具函数
"""

import io
import math
import zipfile
from typing import Any, Dict, List, Optional, Sequence, Union

import yaml

from src.exceptions import ValidationError
from src.pipeline import geometric_grid
from src.potentials import LINE, RADIAL, ConfinementDomain


NumberList = Union[str, Sequence[float], None]


def parse_number_list(value: NumberList, name: str = "列表") -> List[float]:
    """
    解析逗号分隔的数字列表

    Args:
        value: "1,2,3" 形式的字符串或数字序列
        name: 出错时显示的参数名

    Returns:
        List[float]: 数字列表

    Raises:
        ValidationError: 含有无法解析的项
    """
    if value is None:
        return []
    if isinstance(value, str):
        items = [item.strip() for item in value.split(',') if item.strip()]
    else:
        items = list(value)
    try:
        numbers = [float(item) for item in items]
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{name} 含有无法解析的数字：{value!r}") from e
    if not all(math.isfinite(v) for v in numbers):
        raise ValidationError(f"{name} 含有非有限值：{value!r}")
    return numbers


def parse_h_grid(value: NumberList) -> List[float]:
    """
    解析 h 网格

    字符串 "start,stop,count" 表示几何网格；序列按给定的值使用。

    Raises:
        ValidationError: 网格为空或格式错误
    """
    if isinstance(value, str):
        numbers = parse_number_list(value, "h 网格")
        if len(numbers) != 3:
            raise ValidationError(f"h 网格格式应为 start,stop,count：{value!r}")
        start, stop, count = numbers
        if count != int(count):
            raise ValidationError(f"h 网格的点数必须为整数：{count!r}")
        return geometric_grid(start, stop, int(count))
    grid = parse_number_list(value, "h 网格")
    if not grid:
        raise ValidationError("h 网格为空")
    if any(h <= 0 for h in grid):
        raise ValidationError(f"h 必须为正：{grid}")
    return grid


def build_domain(kind: str, interval: NumberList = None, box: Optional[float] = None) -> ConfinementDomain:
    """
    由 --domain / --box 构造受限区间

    Raises:
        ValidationError: 两者都缺失、同时给出或与势函数类型不符
    """
    if interval is not None and box is not None:
        raise ValidationError("--domain 与 --box 只能给出一个")
    if kind == LINE:
        if interval is None:
            raise ValidationError("直线问题需要 --domain a,b")
        bounds = parse_number_list(interval, "--domain")
        if len(bounds) != 2:
            raise ValidationError(f"--domain 需要两个端点：{interval!r}")
        return ConfinementDomain.interval(*bounds)
    if kind == RADIAL:
        if box is None:
            raise ValidationError("径向问题需要 --box L")
        return ConfinementDomain.box(float(box))
    raise ValidationError(f"未知的问题类型：{kind}")


def validate_inputs(params: Dict[str, Any]) -> Optional[str]:
    """
    验证界面输入

    Args:
        params: 界面参数

    Returns:
        Optional[str]: 错误信息，如果验证通过则返回None
    """
    if not str(params.get('potential') or '').strip():
        return "势函数不能为空"

    m = params.get('m')
    if m is None or int(m) != m or m < 0:
        return "m 必须为非负整数"

    h = params.get('h')
    if h is None or not h > 0:
        return "h 必须为正数"

    if params.get('kind') == RADIAL:
        nu = params.get('nu')
        if nu is None or not nu > 0:
            return "径向问题需要正的 ν"
        if not params.get('box') or params['box'] <= 0:
            return "盒子半径必须为正数"
    else:
        try:
            bounds = parse_number_list(params.get('interval'), "区间")
        except ValidationError as e:
            return str(e)
        if len(bounds) != 2 or not bounds[0] < 0 < bounds[1]:
            return "区间必须形如 a,b 且 a < 0 < b"

    return None


def format_table(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    """
    对齐的纯文本表格

    Args:
        rows: 每行一个字典
        columns: 列名，按顺序输出

    Returns:
        str: 表格文本
    """
    def cell(value: Any) -> str:
        if value is None:
            return "-"
        if isinstance(value, float):
            return f"{value:.10g}"
        return str(value)

    body = [[cell(row.get(c)) for c in columns] for row in rows]
    widths = [max([len(c)] + [len(r[i]) for r in body]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)),
             "  ".join("-" * w for w in widths)]
    lines.extend("  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in body)
    return "\n".join(lines)


ARCHIVE_MEMBERS = ('reports.csv', 'reports.json', 'config.yaml')


def build_run_archive(csv_text: str, json_text: str, config: Dict[str, Any]) -> bytes:
    """
    把一次运行的 CSV、JSON 与生效配置打包成 ZIP

    Args:
        csv_text: reports_to_csv 的输出
        json_text: reports_to_json 的输出
        config: 本次运行的配置字典，以 YAML 写入 config.yaml

    Returns:
        bytes: ZIP 文件内容，成员顺序固定为 ARCHIVE_MEMBERS
    """
    config_text = yaml.safe_dump(config, allow_unicode=True, sort_keys=False)
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, 'w', zipfile.ZIP_DEFLATED) as archive:
        for name, text in zip(ARCHIVE_MEMBERS, (csv_text, json_text, config_text)):
            archive.writestr(name, text.encode('utf-8'))
    return buffer.getvalue()
