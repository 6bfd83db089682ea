/** Hash-based routing. The whole navigation state lives in the URL hash so a
 * refresh or a shared link lands on the same view: "#/data?survey=s1&page=2". */

export const PAGES = ["home", "data", "duplicate", "map", "plot", "help"] as const;

export type PageName = (typeof PAGES)[number];

export interface Route {
  page: PageName;
  survey: string | null;
  params: Record<string, string>;
}

export function parseHash(hash: string): Route {
  const trimmed = hash.replace(/^#\/?/, "");
  const [rawPage = "", rawQuery = ""] = trimmed.split("?", 2);
  const page = (PAGES as readonly string[]).includes(rawPage) ? (rawPage as PageName) : "home";
  const params: Record<string, string> = {};
  for (const [key, value] of new URLSearchParams(rawQuery)) {
    params[key] = value;
  }
  const survey = params["survey"] ?? null;
  delete params["survey"];
  return { page, survey, params };
}

export function formatHash(route: Route): string {
  const query = new URLSearchParams();
  if (route.survey !== null) {
    query.set("survey", route.survey);
  }
  for (const key of Object.keys(route.params).sort()) {
    query.set(key, route.params[key] ?? "");
  }
  const suffix = query.toString();
  return `#/${route.page}${suffix ? "?" + suffix : ""}`;
}
