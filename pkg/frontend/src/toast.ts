// Notification toasts with a shortcut to the contact directory.

import { glyphFor } from "./map.js";
import { ToastSpec } from "./state.js";

const TOAST_LIFETIME_MS = 7000;

export function showToast(
  container: HTMLElement,
  spec: ToastSpec,
  onOpen: (incidentId: string) => void,
): void {
  const toast = document.createElement("div");
  toast.className = "toast";
  const head = document.createElement("strong");
  head.textContent = `${glyphFor(spec.category)} ${spec.category} detected`;
  const body = document.createElement("p");
  body.textContent = spec.text;
  const action = document.createElement("button");
  action.textContent = "View & contacts";
  action.addEventListener("click", () => {
    onOpen(spec.incidentId);
    toast.remove();
  });
  const dismiss = document.createElement("button");
  dismiss.className = "toast-dismiss";
  dismiss.textContent = "×";
  dismiss.addEventListener("click", () => toast.remove());
  toast.append(dismiss, head, body, action);
  container.append(toast);
  setTimeout(() => toast.remove(), TOAST_LIFETIME_MS);
}
