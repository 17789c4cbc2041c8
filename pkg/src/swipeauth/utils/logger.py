import logging
import os
from datetime import datetime
from typing import Optional


def setup_logger(name: str, level: str = 'INFO', log_file: Optional[str] = None,
                 log_dir: Optional[str] = 'logs') -> logging.Logger:
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG if log_dir else getattr(logging, level.upper()))

    # avoid duplicate handlers on repeated setup
    if logger.handlers:
        logger.handlers.clear()

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, level.upper()))
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # log_dir=None keeps everything on the console
    if log_dir is not None:
        os.makedirs(log_dir, exist_ok=True)
        if log_file is None:
            log_file = os.path.join(log_dir, f"swipeauth_{datetime.now().strftime('%Y%m%d')}.log")
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


class ExperimentLogger:
    def __init__(self, logger: logging.Logger):
        self.logger = logger

    def log_protocol(self, label: str, train: str, test: str, feature_set: str):
        self.logger.info(f"PROTOCOL | {label} | train={train} | test={test} | set={feature_set}")

    def log_user(self, user: str, eer: float, percentile_i: int, n_genuine: int, n_impostor: int):
        self.logger.debug(f"USER | {user} | EER: {100 * eer:.2f}% | i: {percentile_i} | "
                          f"windows: {n_genuine}/{n_impostor}")

    def log_skip(self, user: str, reason: str):
        self.logger.warning(f"SKIP | {user} | {reason}")

    def log_report(self, label: str, feature_set: str, mean_eer: Optional[float], std_eer: Optional[float],
                   n_users: int):
        if mean_eer is None:
            self.logger.warning(f"REPORT | {label} | {feature_set} | no evaluable users")
            return
        self.logger.info(f"REPORT | {label} | {feature_set} | mean {100 * mean_eer:.1f}% | "
                         f"std {100 * std_eer:.1f} | users {n_users}")

    def log_dataset(self, users: int, sessions: int, swipes: int):
        self.logger.info(f"DATASET | users {users} | sessions {sessions} | swipes {swipes}")

    def log_error(self, error_type: str, message: str, details: str = ""):
        self.logger.error(f"ERROR | {error_type} | {message}")
        if details:
            self.logger.debug(f"Error Details: {details}")
