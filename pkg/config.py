"""
实验配置管理
"""

import copy
import os
from typing import Any, Dict, Optional

import yaml

from src.exceptions import ValidationError


DEFAULTS: Dict[str, Dict[str, Any]] = {
    'debug': {'log_level': 'INFO'},
    'potential': {'spec': 'harmonic', 'kind': 'line'},
    'domain': {'interval': None, 'box': None},
    'mode': {'m': None, 'nu': None, 'h': None},
    'solver': {
        'integrate_tol': 1e-12,
        'newton_tol': 1e-10,
        'newton': 'refreshed',
        'max_iterations': 50,
        'condition_limit': 1e12,
    },
    'oracle': {'enabled': False, 'grid_n': 2000, 'count': 3},
    'sweep': {'h_grid': None, 'jobs': 1},
    'hydrogen': {'n': None, 'ell': None, 'Z': None, 'h': None, 'R_grid': None},
    'output': {'json': None, 'csv': None},
}


class ExperimentConfig:
    """实验配置管理器

    优先级：命令行参数 > 配置文件 > 默认值
    """

    def __init__(self, data: Optional[Dict[str, Any]] = None):
        self.data = self._build_config_data({})
        if data:
            self.merge(data)

    @classmethod
    def load_file(cls, path: str) -> "ExperimentConfig":
        """
        从 YAML 或 JSON 文件加载配置

        Args:
            path: 配置文件路径

        Returns:
            ExperimentConfig: 合并了默认值的配置

        Raises:
            ValidationError: 文件不存在、格式错误或含有未知字段
        """
        if not os.path.exists(path):
            raise ValidationError(f"配置文件不存在：{path}")
        with open(path, 'r', encoding='utf-8') as f:
            try:
                loaded = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ValidationError(f"配置文件解析失败：{e}") from e
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ValidationError("配置文件顶层必须是映射")
        return cls(loaded)

    def merge(self, overrides: Dict[str, Any]) -> "ExperimentConfig":
        """
        把 overrides 合并进当前配置，值为 None 的项不覆盖

        Args:
            overrides: 与默认配置同结构的嵌套字典

        Returns:
            ExperimentConfig: self

        Raises:
            ValidationError: 含有未知的段或字段
        """
        for section, values in overrides.items():
            if section not in DEFAULTS:
                raise ValidationError(f"未知的配置段：{section}")
            if values is None:
                continue
            if not isinstance(values, dict):
                raise ValidationError(f"配置段 {section} 必须是映射")
            for key, value in values.items():
                if key not in DEFAULTS[section]:
                    raise ValidationError(f"未知的配置项：{section}.{key}")
                if value is not None:
                    self.data[section][key] = value
        return self

    def create_memory_config(self, params: Dict[str, Any]) -> Dict[str, Any]:
        """
        由扁平的界面参数创建内存配置（不写入文件）

        Args:
            params: 界面参数，键名见 get_default_params

        Returns:
            Dict[str, Any]: 配置字典
        """
        return self._build_config_data(params)

    def _build_config_data(self, params: Dict[str, Any]) -> Dict[str, Any]:
        data = copy.deepcopy(DEFAULTS)
        mapping = {
            'potential': ('potential', 'spec'),
            'kind': ('potential', 'kind'),
            'interval': ('domain', 'interval'),
            'box': ('domain', 'box'),
            'm': ('mode', 'm'),
            'nu': ('mode', 'nu'),
            'h': ('mode', 'h'),
            'h_grid': ('sweep', 'h_grid'),
            'jobs': ('sweep', 'jobs'),
            'oracle': ('oracle', 'enabled'),
            'grid_n': ('oracle', 'grid_n'),
        }
        for name, (section, key) in mapping.items():
            if params.get(name) is not None:
                data[section][key] = params[name]
        return data

    def section(self, name: str) -> Dict[str, Any]:
        return self.data[name]

    def dump(self) -> str:
        return yaml.safe_dump(self.data, allow_unicode=True, sort_keys=False)

    def get_default_params(self) -> Dict[str, Any]:
        """获取界面默认参数"""
        return {
            'potential': 'harmonic',
            'kind': 'line',
            'interval': '-1,1',
            'box': 1.0,
            'm': 0,
            'nu': 0.5,
            'h': 0.1,
            'h_grid': '0.2,0.05,5',
            'jobs': 1,
            'oracle': False,
            'grid_n': 2000,
        }
