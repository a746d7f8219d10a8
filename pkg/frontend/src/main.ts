/**
 * Entry point: a small start form (dataset, noise type, annotator) that
 * creates a session, or resumes one by id via `#session=<id>`, then hands
 * the page to the session screen.
 */

import { ApiClient } from "./api.js";
import { SessionScreen } from "./session.js";

const NOISE_TYPES = ["irrelevant", "near_duplicate", "label_error"];

function mountStartForm(root: HTMLElement, api: ApiClient): void {
  root.innerHTML = "";
  const form = document.createElement("form");
  form.className = "start-form";

  const dataset = document.createElement("input");
  dataset.placeholder = "dataset name";
  dataset.name = "dataset";
  const annotator = document.createElement("input");
  annotator.placeholder = "annotator id";
  annotator.name = "annotator";
  const noise = document.createElement("select");
  noise.name = "noise_type";
  for (const kind of NOISE_TYPES) {
    const opt = document.createElement("option");
    opt.value = kind;
    opt.textContent = kind;
    noise.appendChild(opt);
  }
  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Start session";

  form.append(dataset, noise, annotator, submit);
  form.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    try {
      const created = await api.createSession(dataset.value, noise.value, annotator.value);
      window.location.hash = `session=${created.session_id}`;
      await runSession(root, api, created.session_id);
    } catch (err) {
      const banner = document.createElement("p");
      banner.className = "error-banner";
      banner.textContent = String(err);
      form.prepend(banner);
    }
  });
  root.appendChild(form);
}

export async function runSession(
  root: HTMLElement,
  api: ApiClient,
  sessionId: string,
  preloadTimeoutMs = 400,
): Promise<SessionScreen> {
  const screen = new SessionScreen(root, api, sessionId, document, preloadTimeoutMs);
  await screen.start();
  return screen;
}

export function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const api = new ApiClient("");
  const match = window.location.hash.match(/session=([A-Za-z0-9]+)/);
  if (match) {
    void runSession(root, api, match[1]);
  } else {
    mountStartForm(root, api);
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
