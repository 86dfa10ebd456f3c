"""Запись результатов сценариев."""
