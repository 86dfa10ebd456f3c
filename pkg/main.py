from cli import cli
from logger_config import setup_logger

# Настраиваем логгер
logger = setup_logger("main")


def main():
    """Точка входа командной строки"""
    try:
        cli()
    except Exception as e:
        logger.error(f"Необработанная ошибка: {str(e)}")
        raise


if __name__ == "__main__":
    main()
