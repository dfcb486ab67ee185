"""Locale catalogs for narration and the console (en/zh/ja).

Catalogs are JSON files shipped as package data; all three must carry
identical key sets, which ``validate_catalogs`` enforces at startup.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

SUPPORTED_LOCALES = ("en", "zh", "ja")
DEFAULT_LOCALE = "en"


def resolve_locale(locale: str | None) -> str:
    """Map a requested locale to a supported one; unknown -> English."""
    if not locale:
        return DEFAULT_LOCALE
    primary = locale.replace("_", "-").split("-")[0].lower()
    return primary if primary in SUPPORTED_LOCALES else DEFAULT_LOCALE


@lru_cache(maxsize=None)
def load_catalog(locale: str) -> dict[str, str]:
    locale = resolve_locale(locale)
    path = resources.files("taxolint").joinpath(f"locales/{locale}.json")
    catalog = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(catalog, dict):
        raise ValueError(f"catalog {locale} is not an object")
    return catalog


def validate_catalogs() -> None:
    """Fail fast when any locale's key set diverges from English."""
    reference = set(load_catalog(DEFAULT_LOCALE))
    for locale in SUPPORTED_LOCALES:
        keys = set(load_catalog(locale))
        if keys != reference:
            missing = sorted(reference - keys)
            extra = sorted(keys - reference)
            raise ValueError(
                f"catalog {locale} keys diverge: missing={missing} extra={extra}"
            )


def render(key: str, locale: str = DEFAULT_LOCALE, **params) -> str:
    """Format one catalog message; unknown locales fall back to English."""
    catalog = load_catalog(resolve_locale(locale))
    template = catalog.get(key)
    if template is None:
        template = load_catalog(DEFAULT_LOCALE)[key]
    return template.format(**params)
