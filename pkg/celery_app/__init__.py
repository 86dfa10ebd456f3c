import os

from celery import Celery

from config import CELERY_BROKER_URL, CELERY_RESULT_BACKEND

# Для prefork на Windows
os.environ.setdefault('FORKED_BY_MULTIPROCESSING', '1')

APP_NAME = 'relkinetic'


def create_celery_app(broker_url: str = CELERY_BROKER_URL, result_backend: str = CELERY_RESULT_BACKEND) -> Celery:
    """
    Приложение Celery для фонового запуска сценариев

    Args:
        broker_url: Адрес брокера
        result_backend: Хранилище результатов

    Returns:
        Celery: Настроенное приложение
    """
    celery_app = Celery(APP_NAME, broker=broker_url, backend=result_backend)
    celery_app.config_from_object('celery_app.celery_config')
    celery_app.autodiscover_tasks(['celery_app.tasks'], force=True)
    return celery_app


app = create_celery_app()
