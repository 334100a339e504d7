# Generated by Django 5.0.7 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='Run',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('train', 'Train'), ('ablation', 'Ablation'), ('sweep', 'Scale sweep'), ('one_epoch', 'One epoch'), ('component_study', 'Component study'), ('ne_study', 'NE study')], db_index=True, max_length=32)),
                ('name', models.CharField(max_length=200)),
                ('variant', models.CharField(blank=True, db_index=True, default='', max_length=100)),
                ('seed', models.IntegerField()),
                ('config_hash', models.CharField(db_index=True, max_length=16)),
                ('config', models.JSONField(default=dict)),
                ('summary', models.JSONField(default=dict)),
                ('record', models.JSONField(default=dict)),
                ('checkpoint', models.CharField(blank=True, default='', max_length=500)),
                ('wall_clock', models.FloatField(default=0.0)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
                'indexes': [models.Index(fields=['kind', 'variant'], name='run_kind_variant_idx')],
            },
        ),
    ]
