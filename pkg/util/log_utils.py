# coding=utf-8
import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))

import time, traceback, threading

from config.config import LOG_DIR, LOG_TO_FILE, LOG_PRINT_SCREEN

_LOCK = threading.Lock()


class Log:
    """
    日志系统
    记录数值计算过程中的信息与异常。屏幕输出走 stderr，stdout 只留给数据集。
    """
    def __init__(self, dir_name='', additional_info: str = '', to_file: bool = LOG_TO_FILE,
                 print_screen: bool = LOG_PRINT_SCREEN):
        """
        初始化函数
        检查是否存在指定的日志目录，如果没有则创建
        """
        self.dir_name = os.path.join(LOG_DIR, dir_name) if dir_name else LOG_DIR
        self.additional_info = additional_info
        self.to_file = to_file
        self.print_screen = print_screen
        if not self.to_file:
            return
        try:
            if not os.path.exists(self.dir_name):
                os.makedirs(self.dir_name)
        except Exception as e:
            sys.stderr.write(f"创建日志目录 {self.dir_name} 发生错误: {e}\n")
            self.to_file = False

    def log_info(self, message: str, print_screen: bool = None):
        """
        记录一般信息
        :param message: 要记录的信息
        :param print_screen: 是否在屏幕（stderr）上也显示该信息，None 表示使用默认设置
        """
        current_time = time.strftime("%Y-%m-%d %H:%M:%S", time.localtime())
        message = f"{current_time} {self.additional_info}  === {message}"

        if self.print_screen if print_screen is None else print_screen:
            sys.stderr.write(message + '\n')

        if not self.to_file:
            return
        file_name = os.path.join(self.dir_name, time.strftime("%Y-%m-%d-%H", time.localtime()) + '.log')
        try:
            with _LOCK:
                with open(file_name, "a", encoding="utf-8") as fa:
                    fa.write(message + '\n')
        except Exception as e:
            sys.stderr.write(f"写入日志信息 {message} 发生错误: {e}\n")

    def log_warning(self, message: str, print_screen: bool = None):
        """记录警告信息（数值结果可用但需要留意）。"""
        self.log_info(f"WARNING: {message}", print_screen)

    def log_exception(self, print_screen: bool = None):
        """
        记录异常信息
        :param print_screen: 是否在屏幕上也显示该信息
        """
        exc_type, exc_value, exc_traceback = sys.exc_info()
        error_message = repr(traceback.format_exception(exc_type, exc_value, exc_traceback))
        self.log_info(f"Exception: {error_message}", print_screen)


logger = Log()
