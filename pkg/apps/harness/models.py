from django.db import models
from django.db.models import Index


class VerificationRun(models.Model):
    STATUS_CHOICES = [
        ('PASS', '通过'),
        ('PASS_WITH_WARNING', '通过（容差内负 deficit）'),
        ('FAIL', '失败'),
    ]
    SPACE_CHOICES = [
        ('circle', '圆周'),
        ('torus2', '二维环面'),
        ('sphere_zonal', '纬向球面'),
    ]

    name = models.CharField(max_length=40, verbose_name='检查名称')
    space_kind = models.CharField(max_length=20, choices=SPACE_CHOICES, verbose_name='模型空间')
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, verbose_name='结果')
    min_deficit = models.FloatField(null=True, blank=True, verbose_name='最小 deficit')
    tolerance = models.FloatField(null=True, blank=True, verbose_name='容差')
    params = models.JSONField(default=dict, verbose_name='参数')
    payload = models.JSONField(default=dict, verbose_name='报告')
    created_at = models.DateTimeField(auto_now_add=True, verbose_name='创建时间')

    class Meta:
        db_table = 'verification_runs'
        verbose_name = '验证记录'
        verbose_name_plural = '验证记录'
        ordering = ['-created_at']
        indexes = [
            Index(fields=['name', 'status'], name='verificatio_name_3f1c2a_idx'),
        ]

    def __str__(self):
        return f"{self.name} [{self.space_kind}] {self.status}"
