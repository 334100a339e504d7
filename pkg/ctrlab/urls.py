"""
URL configuration for ctrlab.

The admin lists and filters logged runs; /runs/ serves the same data as JSON.
"""

from django.contrib import admin  # pyright: ignore[reportMissingModuleSource]
from django.urls import path, include  # pyright: ignore[reportMissingModuleSource]


urlpatterns = [
    path("admin/", admin.site.urls),
    path("runs/", include("experiments.urls")),
]
