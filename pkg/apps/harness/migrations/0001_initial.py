# Generated by Django 4.2.7

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='VerificationRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=40, verbose_name='检查名称')),
                ('space_kind', models.CharField(choices=[('circle', '圆周'), ('torus2', '二维环面'), ('sphere_zonal', '纬向球面')], max_length=20, verbose_name='模型空间')),
                ('status', models.CharField(choices=[('PASS', '通过'), ('PASS_WITH_WARNING', '通过（容差内负 deficit）'), ('FAIL', '失败')], max_length=20, verbose_name='结果')),
                ('min_deficit', models.FloatField(blank=True, null=True, verbose_name='最小 deficit')),
                ('tolerance', models.FloatField(blank=True, null=True, verbose_name='容差')),
                ('params', models.JSONField(default=dict, verbose_name='参数')),
                ('payload', models.JSONField(default=dict, verbose_name='报告')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='创建时间')),
            ],
            options={
                'verbose_name': '验证记录',
                'verbose_name_plural': '验证记录',
                'db_table': 'verification_runs',
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['name', 'status'], name='verificatio_name_3f1c2a_idx')],
            },
        ),
    ]
