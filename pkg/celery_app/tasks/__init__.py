"""Фоновые задачи: запуск сценариев из очереди."""
