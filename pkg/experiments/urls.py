from django.urls import path  # pyright: ignore[reportMissingModuleSource]
from . import views

app_name = "experiments"

urlpatterns = [
    path("", views.run_list, name="run_list"),
    path("<int:run_id>/", views.run_detail, name="run_detail"),
    path("<int:run_id>/curve.csv", views.run_curve_csv, name="run_curve_csv"),
]
