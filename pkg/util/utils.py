import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))

import inspect
from concurrent.futures import ThreadPoolExecutor, as_completed
from functools import wraps


### 异常体系 ###
class SquareWellError(Exception):
    """本项目所有异常的基类。"""
    pass


class DomainError(SquareWellError, ValueError):
    """参数越出定义域（a、v0、k 非正，r < a，网格退化等）。"""
    pass


class NumericalError(SquareWellError, RuntimeError):
    """内部数值失败。"""
    pass


class PhaseUnwrapError(NumericalError):
    """相位展开时步长下溢，无法保证相邻点 |Δφ| < π/2。"""
    pass


class ConvergenceError(NumericalError):
    """加倍细化在允许的次数内没有稳定下来。"""
    pass


def require(condition: bool, message: str) -> None:
    if not condition:
        raise DomainError(message)


### 加倍细化装饰器 ###
def doubling(param, retries=8, same=None, logger=None):
    """反复调用被装饰函数，每次把整数参数 `param` 翻倍，直到相邻两次结果满足 `same`。

    Args:
        param: 需要翻倍的参数名（节点数、采样数等）。
        retries: 最多翻倍次数。
        same: same(previous, current) -> bool，判断是否已经稳定。
        logger: 可选的 Log 实例。

    Raises:
        ConvergenceError: 翻倍次数用完仍未稳定。
    """
    def decorator_doubling(func):
        signature = inspect.signature(func)

        @wraps(func)
        def wrapper_doubling(*args, **kwargs):
            bound = signature.bind(*args, **kwargs)
            bound.apply_defaults()
            previous = func(*bound.args, **bound.kwargs)
            for attempt in range(retries):
                bound.arguments[param] *= 2
                current = func(*bound.args, **bound.kwargs)
                if same(previous, current):
                    return current
                if logger:
                    logger.log_info(f"【{func.__name__}】Attempt {attempt + 1}: {param}={bound.arguments[param]} not settled yet")
                previous = current
            if logger:
                logger.log_info(f"【{func.__name__}】All {retries} doublings failed.")
            raise ConvergenceError(f"{func.__name__} did not settle after {retries} doublings of {param}")
        return wrapper_doubling
    return decorator_doubling


### 并行批处理 ###
def batch_map(func, items, max_workers=4, logger=None):
    """用线程池并行计算 func(item)，结果顺序与 items 一致。"""
    items = list(items)
    if logger:
        logger.log_info(f"【batch_map】Start {getattr(func, '__name__', 'task')} over {len(items)} items")
    if not items:
        return []
    if max_workers <= 1 or len(items) == 1:
        return [func(item) for item in items]
    results = [None] * len(items)
    with ThreadPoolExecutor(max_workers=min(max_workers, len(items))) as executor:
        tasks = {executor.submit(func, item): i for i, item in enumerate(items)}
        for future in as_completed(tasks):
            results[tasks[future]] = future.result()
    return results
