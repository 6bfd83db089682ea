/** Non-blocking notifications. Errors stick around and can carry a retry
 * action; informational toasts expire on their own. */

export interface ToastOptions {
  retry?: () => void;
  timeoutMs?: number;
}

export interface ToastHost {
  info(message: string, options?: ToastOptions): void;
  error(message: string, options?: ToastOptions): void;
}

const INFO_TIMEOUT_MS = 4000;

export function createToastHost(doc: Document): ToastHost {
  const container = doc.createElement("div");
  container.className = "toasts";
  doc.body.appendChild(container);

  function show(kind: "info" | "error", message: string, options: ToastOptions = {}): void {
    const toast = doc.createElement("div");
    toast.className = `toast toast-${kind}`;
    const text = doc.createElement("span");
    text.textContent = message;
    toast.appendChild(text);

    const dismiss = () => toast.remove();
    if (options.retry) {
      const retryButton = doc.createElement("button");
      retryButton.textContent = "Retry";
      retryButton.addEventListener("click", () => {
        dismiss();
        options.retry?.();
      });
      toast.appendChild(retryButton);
    }
    const closeButton = doc.createElement("button");
    closeButton.textContent = "×";
    closeButton.setAttribute("aria-label", "dismiss");
    closeButton.addEventListener("click", dismiss);
    toast.appendChild(closeButton);

    container.appendChild(toast);
    if (kind === "info") {
      setTimeout(dismiss, options.timeoutMs ?? INFO_TIMEOUT_MS);
    }
  }

  return {
    info: (message, options) => show("info", message, options),
    error: (message, options) => show("error", message, options),
  };
}
