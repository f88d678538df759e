from django.apps import AppConfig


class FormsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.forms'
    label = 'lab_forms'
    verbose_name = '1-形式与 Hodge 流'
