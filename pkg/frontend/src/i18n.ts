/** Catalog lookup and static-label replacement.
 *
 * Every piece of static UI text is a catalog key; nothing user-facing
 * is hard-coded here, so a locale switch is a pure catalog swap.
 */

import type { Catalog } from "./types";

export const LOCALES = ["en", "zh", "ja"] as const;

export type Locale = (typeof LOCALES)[number];

export function t(catalog: Catalog, key: string, params?: Record<string, string>): string {
  let message = catalog[key] ?? key;
  for (const [name, value] of Object.entries(params ?? {})) {
    message = message.replaceAll(`{${name}}`, value);
  }
  return message;
}

/** Re-text every [data-i18n] element from the active catalog. */
export function applyCatalog(root: ParentNode, catalog: Catalog): void {
  root.querySelectorAll<HTMLElement>("[data-i18n]").forEach((el) => {
    el.textContent = t(catalog, el.dataset.i18n as string);
  });
  root.querySelectorAll<HTMLElement>("[data-i18n-placeholder]").forEach((el) => {
    el.setAttribute("placeholder", t(catalog, el.dataset.i18nPlaceholder as string));
  });
}
