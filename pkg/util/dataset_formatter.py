# util/dataset_formatter.py
import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))

import io
import json
import math
from typing import Optional

import pandas as pd

from config.config import DEFAULT_DIGITS
from util.log_utils import logger
from util.utils import require

FORMATS = ('csv', 'json')


def _round_value(value, digits: int):
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.{digits}g}")
    return value


class DatasetFormatter:
    """把计算结果（DataFrame）渲染成 CSV 或 JSON 文本。

    同样的输入总是得到逐字节相同的输出：浮点数统一保留 digits 位有效数字，
    换行固定为 LF。
    """

    @staticmethod
    def format_csv(frame: pd.DataFrame, digits: int = DEFAULT_DIGITS) -> str:
        """逗号分隔、首行为列名；超过 digits 位有效数字时使用科学计数法。

        Args:
            frame: 要输出的表。
            digits: 有效数字位数。

        Returns:
            str: CSV 文本。
        """
        require(int(digits) >= 1, f"--digits must be at least 1, got {digits}")
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False, float_format=f"%.{int(digits)}g", lineterminator='\n', na_rep='nan')
        return buffer.getvalue()

    @staticmethod
    def format_json(frame: pd.DataFrame, digits: int = DEFAULT_DIGITS) -> str:
        """对象数组，字段名与 CSV 列名一致；NaN 与 ±inf 输出为 null。"""
        require(int(digits) >= 1, f"--digits must be at least 1, got {digits}")
        records = [
            {column: _round_value(value.item() if hasattr(value, 'item') else value, int(digits))
             for column, value in row.items()}
            for row in frame.to_dict(orient='records')
        ]
        return json.dumps(records, ensure_ascii=False, indent=1) + '\n'

    @staticmethod
    def render(frame: pd.DataFrame, fmt: str = 'csv', digits: int = DEFAULT_DIGITS) -> str:
        require(fmt in FORMATS, f"--format must be one of {FORMATS}, got {fmt!r}")
        if fmt == 'json':
            return DatasetFormatter.format_json(frame, digits)
        return DatasetFormatter.format_csv(frame, digits)

    @staticmethod
    def write(text: str, path: Optional[str] = None) -> None:
        """写到文件（UTF-8、LF），path 为空或 '-' 时写到标准输出。"""
        if not path or path == '-':
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        with open(path, 'w', encoding='utf-8', newline='\n') as fw:
            fw.write(text)
        logger.log_info(f"【dataset_formatter】已写入 {path}（{len(text)} 字符）")
