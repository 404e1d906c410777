/** Entry point: rater-id screen, then the rating session. The service base
 * URL defaults to the page origin and can be overridden with ?service=. */

import { ApiClient } from "./api.js";
import { DraftStore } from "./drafts.js";
import { SessionController } from "./session.js";
import { SessionRenderer } from "./ui.js";

function bootstrap(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("service") ?? "";
  const presetRater = params.get("rater_id");
  const country = params.get("country") ?? undefined;

  if (presetRater) {
    startSession(root, baseUrl, presetRater, country);
    return;
  }

  const form = document.createElement("form");
  form.className = "entry";
  const label = document.createElement("label");
  label.textContent = "Enter your rater id to begin:";
  const input = document.createElement("input");
  input.name = "rater_id";
  input.required = true;
  input.placeholder = "e.g. rater-042";
  const go = document.createElement("button");
  go.type = "submit";
  go.textContent = "Start rating";
  form.append(label, input, go);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (input.value.trim()) {
      startSession(root, baseUrl, input.value.trim(), country);
    }
  });
  root.replaceChildren(form);
}

function startSession(root: HTMLElement, baseUrl: string, raterId: string, country?: string): void {
  const controller = new SessionController(
    new ApiClient(baseUrl),
    new DraftStore(window.localStorage),
    raterId,
    country,
  );
  const renderer = new SessionRenderer(root, controller);
  void renderer.start();
}

bootstrap();
