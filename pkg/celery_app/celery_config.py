import platform

from config import DEFAULT_THREADS

# Сериализация: итог сценария - обычный json
task_serializer = 'json'
result_serializer = 'json'
accept_content = ['json']
timezone = 'UTC'
enable_utc = True

# Все сценарии идут в отдельную очередь
task_default_queue = 'scenarios'
task_routes = {
    'celery_app.tasks.scenario_tasks.*': {'queue': 'scenarios'},
}

if platform.system() == 'Windows':
    worker_pool = 'solo'
else:
    worker_pool = 'prefork'

# Каждый сценарий сам занимает до RFP_THREADS потоков BLAS
worker_concurrency = max(1, 4 // max(DEFAULT_THREADS, 1))
worker_prefetch_multiplier = 1
worker_max_tasks_per_child = 20

worker_log_format = '[%(asctime)s: %(levelname)s/%(processName)s] %(message)s'
worker_task_log_format = '[%(asctime)s: %(levelname)s/%(processName)s][%(task_name)s(%(task_id)s)] %(message)s'

imports = (
    'celery_app.tasks.scenario_tasks',
)

task_track_started = True
result_expires = 7 * 24 * 3600
task_time_limit = 6 * 3600
task_soft_time_limit = 6 * 3600 - 300
task_acks_late = True
task_reject_on_worker_lost = True
