from django.contrib import admin
from .models import VerificationRun


@admin.register(VerificationRun)
class VerificationRunAdmin(admin.ModelAdmin):
    list_display = ('name', 'space_kind', 'status', 'min_deficit', 'tolerance', 'created_at')
    list_filter = ('name', 'space_kind', 'status', 'created_at')
    search_fields = ('name',)
    date_hierarchy = 'created_at'
    readonly_fields = ('params', 'payload', 'created_at')
