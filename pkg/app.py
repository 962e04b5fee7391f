"""
受限本征值位移对照 - Streamlit版本
单个问题或 h 扫描的网页界面，结果以表格显示并可下载 CSV / JSON / ZIP
"""

from typing import Any, Dict

import streamlit as st

from config import ExperimentConfig
from src.exceptions import ConfinedShiftError
from src.pipeline import (
    ShiftPipeline,
    SolverSettings,
    empirical_order,
    reports_to_csv,
    reports_to_json,
)
from src.potentials import RADIAL, resolve_potential
from src.shooting import ModeSpec
from utils import (
    build_domain,
    build_run_archive,
    parse_h_grid,
    validate_inputs,
)

# 页面配置
st.set_page_config(
    page_title="受限本征值位移对照",
    page_icon="📈",
    layout="wide",
    initial_sidebar_state="expanded"
)

config_manager = ExperimentConfig()

# 会话状态初始化
if 'result' not in st.session_state:
    st.session_state.result = None
if 'error' not in st.session_state:
    st.session_state.error = None


def run_experiment(params: Dict[str, Any], sweep: bool, progress_callback) -> Dict[str, Any]:
    """按界面参数运行单例或扫描，返回表格与下载内容"""
    config = config_manager.create_memory_config(params)
    progress_callback(10, "配置准备完成")

    kind = config['potential']['kind']
    p = resolve_potential(config['potential']['spec'], kind=kind)
    domain = build_domain(p.kind, config['domain']['interval'] if p.kind != RADIAL else None,
                          config['domain']['box'] if p.kind == RADIAL else None)
    mode = ModeSpec(int(config['mode']['m']), float(config['mode']['h']),
                    float(config['mode']['nu']) if p.kind == RADIAL else None)
    pipeline = ShiftPipeline(SolverSettings.from_config(config['solver']), show_progress=False)
    progress_callback(30, "势函数与区间准备完成")

    if sweep:
        grid = parse_h_grid(config['sweep']['h_grid'])
        reports = pipeline.run_sweep(p, domain, mode, grid, jobs=int(config['sweep']['jobs']))
        order = empirical_order([r.h for r in reports if r.ok], [r.ratio for r in reports if r.ok])
        summary = {'empirical_order': order}
        command = 'sweep'
    else:
        reports = [pipeline.run_case(p, domain, mode, oracle=bool(config['oracle']['enabled']),
                                     grid_n=int(config['oracle']['grid_n']))]
        summary = {}
        command = 'shift'
    progress_callback(90, "计算完成")

    csv_text = reports_to_csv(reports)
    json_text = reports_to_json(reports, command, summary)
    zip_data = build_run_archive(csv_text, json_text, config)
    progress_callback(100, "结果打包完成")
    return {
        'rows': [r.to_dict() for r in reports],
        'summary': summary,
        'csv': csv_text,
        'json': json_text,
        'zip_data': zip_data,
    }


def main():
    """主应用函数"""
    st.title("受限本征值位移对照")
    st.markdown("""
    计算 Dirichlet 受限区间上的低阶本征值，与无约束本征值相减得到位移，
    并与领头阶渐近公式对照。输入参数后点击**开始计算**。
    """)

    defaults = config_manager.get_default_params()

    with st.sidebar:
        st.header("⚙️ 高级选项")
        sweep = st.checkbox("h 扫描", value=False, help="在几何 h 网格上逐点计算并拟合经验阶数")
        h_grid = st.text_input("h 网格 (start,stop,count)", value=defaults['h_grid'], disabled=not sweep)
        jobs = st.number_input("并发行数", min_value=1, max_value=16, value=defaults['jobs'], disabled=not sweep)
        oracle = st.checkbox("有限差分校验", value=defaults['oracle'], disabled=sweep)
        grid_n = st.number_input("有限差分网格", min_value=200, value=defaults['grid_n'], step=200)

    col1, col2 = st.columns([2, 1])

    with col1:
        st.header("参数设置")
        with st.form("problem_form"):
            potential = st.text_input("势函数", value=defaults['potential'],
                                      help="内置名称（harmonic、quartic(c)、cosh）或表达式，如 x^2+x^4")
            kind = st.radio("问题类型", options=["line", "radial"], index=0, horizontal=True)
            col_a, col_b = st.columns(2)
            with col_a:
                interval = st.text_input("直线区间 a,b", value=defaults['interval'])
                m = st.number_input("m", min_value=0, value=defaults['m'], step=1)
            with col_b:
                box = st.number_input("径向盒子 L", min_value=0.0, value=defaults['box'])
                nu = st.number_input("ν", min_value=0.0, value=defaults['nu'])
            h = st.number_input("h", min_value=0.0, value=defaults['h'], format="%.4f")
            submitted = st.form_submit_button("开始计算", use_container_width=True)

    with col2:
        st.header("计算状态")
        progress_bar = st.progress(0)
        status_text = st.empty()
        result_container = st.container()

    if submitted:
        params = {
            'potential': potential, 'kind': kind, 'interval': interval, 'box': box,
            'm': int(m), 'nu': nu, 'h': h, 'h_grid': h_grid, 'jobs': int(jobs),
            'oracle': oracle, 'grid_n': int(grid_n),
        }
        error = validate_inputs(params)
        if error:
            st.error(error)
            return

        st.session_state.result = None
        st.session_state.error = None

        def update_progress(percent, message):
            progress_bar.progress(percent / 100)
            status_text.text(f"{percent}% - {message}")

        try:
            with st.spinner("正在计算，请稍候..."):
                st.session_state.result = run_experiment(params, sweep, update_progress)
            status_text.text("✅ 计算完成！")
        except ConfinedShiftError as e:
            st.session_state.error = str(e)
            status_text.text(f"❌ 计算失败: {e}")

    with result_container:
        if st.session_state.result:
            result = st.session_state.result
            st.success("🎉 计算成功！")
            order = result['summary'].get('empirical_order')
            if order is not None:
                st.write(f"**经验阶数:** {order:.4f}")
            st.download_button("📥 下载 CSV", data=result['csv'], file_name="reports.csv",
                               mime="text/csv", use_container_width=True)
            st.download_button("📥 下载 JSON", data=result['json'], file_name="reports.json",
                               mime="application/json", use_container_width=True)
            st.download_button(
                label="📥 下载 ZIP（CSV + JSON + 配置）",
                data=result['zip_data'], file_name="reports.zip",
                mime="application/zip", use_container_width=True
            )
        elif st.session_state.error:
            st.error(f"❌ 计算失败: {st.session_state.error}")

    if st.session_state.result:
        st.header("📋 结果")
        st.dataframe(st.session_state.result['rows'], use_container_width=True)


if __name__ == "__main__":
    main()
