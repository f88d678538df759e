from django.apps import AppConfig


class SemigroupConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.semigroup'
    verbose_name = '扩散半群'
