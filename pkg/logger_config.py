import logging
import os
from datetime import datetime

from config import LOG_DIR, LOG_LEVEL


def setup_logger(name: str) -> logging.Logger:
    """
    Настройка логгера с записью в файл и консоль

    Повторный вызов с тем же именем возвращает уже настроенный логгер,
    обработчики не дублируются.

    Args:
        name: Имя логгера

    Returns:
        logging.Logger: Настроенный логгер
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    # Создаем директорию для логов, если её нет
    os.makedirs(LOG_DIR, exist_ok=True)

    # Файл лога на текущую дату
    current_date = datetime.now().strftime("%Y-%m-%d")
    log_file = os.path.join(LOG_DIR, f"{current_date}.log")

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    file_handler = logging.FileHandler(log_file, encoding='utf-8')
    file_handler.setFormatter(formatter)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)

    logger.setLevel(getattr(logging, LOG_LEVEL, logging.INFO))
    logger.addHandler(file_handler)
    logger.addHandler(console_handler)
    logger.propagate = False

    return logger
