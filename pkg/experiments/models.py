from django.db import models  # pyright: ignore[reportMissingModuleSource]


class Run(models.Model):
    """One finished training run and its logged record."""

    KIND_CHOICES = [
        ("train", "Train"),
        ("ablation", "Ablation"),
        ("sweep", "Scale sweep"),
        ("one_epoch", "One epoch"),
        ("component_study", "Component study"),
        ("ne_study", "NE study"),
    ]

    kind = models.CharField(max_length=32, choices=KIND_CHOICES, db_index=True)
    name = models.CharField(max_length=200)
    variant = models.CharField(max_length=100, blank=True, default="", db_index=True)
    seed = models.IntegerField()
    config_hash = models.CharField(max_length=16, db_index=True)

    config = models.JSONField(default=dict)
    summary = models.JSONField(default=dict)  # headline fused + per-component metrics
    record = models.JSONField(default=dict)

    checkpoint = models.CharField(max_length=500, blank=True, default="")
    wall_clock = models.FloatField(default=0.0)  # seconds
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created_at", "-id"]
        indexes = [models.Index(fields=["kind", "variant"], name="run_kind_variant_idx")]

    def __str__(self):
        label = f"{self.name} [{self.variant}]" if self.variant else self.name
        return f"{label} seed={self.seed}"

    @property
    def fused_auc(self):
        return (self.summary.get("fused") or {}).get("auc")

    @property
    def curve(self) -> list:
        return self.record.get("curve") or []
