import type { ApiClient } from "./api.js";
import type { Route } from "./router.js";
import type { ToastHost } from "./toast.js";
import type { LabelSchema } from "./types.js";

/** Everything a page needs to render itself. */
export interface PageContext {
  doc: Document;
  api: ApiClient;
  schema: LabelSchema;
  toasts: ToastHost;
  route: Route;
  navigate(route: Route): void;
  refresh(): void;
}
