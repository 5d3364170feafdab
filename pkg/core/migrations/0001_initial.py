# Generated by Django 5.2.7 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='Run',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('subcommand', models.CharField(max_length=20)),
                ('config', models.TextField()),
                ('version', models.CharField(max_length=20)),
                ('status', models.CharField(choices=[('ok', 'OK'), ('failed', 'Checks failed'), ('rejected', 'Rejected input')], default='ok', max_length=10)),
                ('exit_code', models.IntegerField(default=0)),
                ('out_dir', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
    ]
