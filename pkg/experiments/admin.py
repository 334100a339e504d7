from django.contrib import admin  # pyright: ignore[reportMissingModuleSource]

from .models import Run


@admin.register(Run)
class RunAdmin(admin.ModelAdmin):
    list_display = (
        "name",
        "kind",
        "variant",
        "seed",
        "config_hash",
        "fused_auc",
        "wall_clock",
        "created_at",
    )
    list_filter = ("kind", "variant")
    search_fields = ("name", "config_hash")
    ordering = ("-created_at",)
    readonly_fields = (
        "kind",
        "name",
        "variant",
        "seed",
        "config_hash",
        "config",
        "summary",
        "record",
        "checkpoint",
        "wall_clock",
        "created_at",
    )

    @admin.display(description="Fused AUC")
    def fused_auc(self, obj):
        auc = obj.fused_auc
        return f"{auc:.5f}" if auc is not None else "-"
