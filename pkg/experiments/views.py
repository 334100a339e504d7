import csv

from django.http import (  # pyright: ignore[reportMissingModuleSource]
    HttpResponse,
    JsonResponse,
)
from django.shortcuts import get_object_or_404  # pyright: ignore[reportMissingModuleSource]
from django.views.decorators.http import require_GET  # pyright: ignore[reportMissingModuleSource]

from .models import Run

MAX_LIST = 500


def _run_row(run: Run) -> dict:
    return {
        "id": run.id,
        "kind": run.kind,
        "name": run.name,
        "variant": run.variant,
        "seed": run.seed,
        "config_hash": run.config_hash,
        "summary": run.summary,
        "wall_clock": run.wall_clock,
        "created_at": run.created_at.isoformat(),
    }


@require_GET
def run_list(request):
    runs = Run.objects.all()
    kind = (request.GET.get("kind") or "").strip()
    variant = (request.GET.get("variant") or "").strip()
    if kind:
        runs = runs.filter(kind=kind)
    if variant:
        runs = runs.filter(variant=variant)
    return JsonResponse({"runs": [_run_row(r) for r in runs[:MAX_LIST]]})


@require_GET
def run_detail(request, run_id: int):
    run = get_object_or_404(Run, pk=run_id)
    return JsonResponse(
        {
            **_run_row(run),
            "config": run.config,
            "record": run.record,
            "checkpoint": run.checkpoint,
        }
    )


@require_GET
def run_curve_csv(request, run_id: int):
    """NE learning curve of a run as CSV: step, fused NE, one column per component."""
    run = get_object_or_404(Run, pk=run_id)
    curve = run.curve
    names = sorted({name for point in curve for name in point.get("components", {})})

    response = HttpResponse(content_type="text/csv")
    response["Content-Disposition"] = f'attachment; filename="run-{run.id}-curve.csv"'
    writer = csv.writer(response, lineterminator="\n")
    writer.writerow(["step", "ne", *(f"ne_{name}" for name in names)])
    for point in curve:
        per = point.get("components", {})
        writer.writerow([point["step"], point["ne"], *(per.get(name, "") for name in names)])
    return response
