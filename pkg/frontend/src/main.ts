/** Application bootstrap: fetch the label schema once, then render the page
 * named by the URL hash into the #view container. */

import { ApiClient } from "./api.js";
import { el } from "./dom.js";
import { formatHash, parseHash, PAGES } from "./router.js";
import { createToastHost } from "./toast.js";
import { renderData } from "./pages/data.js";
import { renderDuplicate } from "./pages/duplicate.js";
import { renderHelp } from "./pages/help.js";
import { renderHome } from "./pages/home.js";
import { renderMapPage } from "./pages/map.js";
import { renderPlot } from "./pages/plot.js";
import type { PageContext } from "./context.js";
import type { Route } from "./router.js";

const PAGE_TITLES: Record<string, string> = {
  home: "Home",
  data: "Data",
  duplicate: "Duplicate",
  map: "Map",
  plot: "Plot",
  help: "Help",
};

export async function boot(win: Window, api = new ApiClient()): Promise<void> {
  const doc = win.document;
  const toasts = createToastHost(doc);
  const nav = doc.getElementById("nav");
  const view = doc.getElementById("view");
  if (!nav || !view) {
    throw new Error("missing #nav or #view container");
  }

  let schema;
  try {
    schema = await api.schema();
  } catch (cause) {
    view.textContent = "The survey service is not reachable. Start it and reload.";
    toasts.error(String(cause), { retry: () => win.location.reload() });
    return;
  }

  const navigate = (route: Route) => {
    const hash = formatHash(route);
    if (win.location.hash === hash) {
      render();
    } else {
      win.location.hash = hash;
    }
  };

  const render = () => {
    const route = parseHash(win.location.hash);
    nav.replaceChildren();
    for (const page of PAGES) {
      const link = el(doc, "a", { href: formatHash({ ...route, page, params: {} }) }, PAGE_TITLES[page] ?? page);
      if (page === route.page) {
        link.className = "active";
      }
      nav.appendChild(link);
    }

    const ctx: PageContext = {
      doc,
      api,
      schema,
      toasts,
      route,
      navigate,
      refresh: render,
    };
    view.replaceChildren();
    const painters: Record<string, (c: PageContext, v: HTMLElement) => void | Promise<void>> = {
      home: renderHome,
      data: renderData,
      duplicate: renderDuplicate,
      map: renderMapPage,
      plot: renderPlot,
      help: renderHelp,
    };
    const paint = painters[route.page] ?? renderHome;
    Promise.resolve(paint(ctx, view)).catch((cause) => {
      toasts.error(`page failed to render: ${String(cause)}`, { retry: render });
    });
  };

  win.addEventListener("hashchange", render);
  render();
}

// The test runner imports this module; only a real browser boots it.
if (typeof window !== "undefined" && typeof document !== "undefined") {
  void boot(window);
}
