// Example Generator panel: the "Generate Similar Example" button, the lock
// timer / quota badge, and the scaffold display honoring the fading level.
//
// Disabled states always mirror the last service response; hidden scaffold
// parts are never added to the document tree at all.

import { ApiError, type ApiClient } from "./api";
import type { ScaffoldPayload, ScaffoldState } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderScaffold(payload: ScaffoldPayload): HTMLElement {
  const card = el("div", "scaffold-card");
  card.dataset.fading = payload.fading_level;

  const statement = el("div", "scaffold-statement");
  statement.appendChild(el("h3", "scaffold-heading", "Example problem"));
  statement.appendChild(el("p", "scaffold-statement-text", payload.statement));
  card.appendChild(statement);

  if (payload.fading_level === "statement_only") {
    return card;
  }

  if (payload.fading_level === "full" && payload.code !== undefined) {
    const codeSection = el("div", "scaffold-code-section");
    codeSection.appendChild(el("h3", "scaffold-heading", "Reference code"));
    const pre = el("pre", "scaffold-code");
    pre.textContent = payload.code;
    codeSection.appendChild(pre);
    if (payload.candidate_io && payload.candidate_io.length > 0) {
      const io = el("ul", "scaffold-io");
      for (const pair of payload.candidate_io) {
        io.appendChild(el("li", "scaffold-io-pair",
          `input: ${JSON.stringify(pair.input)} -> output: ${JSON.stringify(pair.expected_output)}`));
      }
      codeSection.appendChild(io);
    }
    card.appendChild(codeSection);
  } else {
    // faded: the code stays server-side; only a collapsed marker renders
    card.appendChild(el("div", "scaffold-code-faded",
      "Reference code is faded at this disclosure level - work from the explanation."));
  }

  if (payload.explanation !== undefined) {
    const explanation = el("div", "scaffold-explanation");
    explanation.appendChild(el("h3", "scaffold-heading", "Explanation"));
    explanation.appendChild(el("p", "scaffold-explanation-text", payload.explanation));
    card.appendChild(explanation);
  }

  if (payload.relation && payload.relation.entries.length > 0) {
    const relation = el("div", "relation-map");
    relation.appendChild(el("h3", "scaffold-heading", "How the tasks correspond"));
    relation.appendChild(el("p", "relation-summary", payload.relation.summary));
    const table = el("table", "relation-table");
    const head = el("tr", "relation-head");
    head.appendChild(el("th", "", "In the target task"));
    head.appendChild(el("th", "", "In this example"));
    table.appendChild(head);
    for (const entry of payload.relation.entries) {
      const row = el("tr", "relation-row");
      row.title = entry.note;
      row.appendChild(el("td", "relation-target", entry.target_element));
      row.appendChild(el("td", "relation-scaffold", entry.scaffold_element));
      table.appendChild(row);
    }
    relation.appendChild(table);
    card.appendChild(relation);
  }
  return card;
}

const ERROR_NOTICES: Record<number, (body: { detail: string; unlock_at?: number | null; retry_after_s?: number }) => string> = {
  423: (body) => body.unlock_at
    ? `Locked: scaffolds unlock at ${new Date(body.unlock_at * 1000).toLocaleTimeString()}.`
    : `Locked: ${body.detail}`,
  429: () => "Quota exhausted: no scaffold generations left for this task.",
  403: () => "Not allowed: this closeness is disabled by the course policy.",
  503: (body) => `The run service is busy - try again in ${body.retry_after_s ?? 1}s.`,
  502: () => "The example generator is unreachable right now - try again shortly.",
};

export interface ScaffoldPanelHandle {
  root: HTMLElement;
  refresh(state: ScaffoldState): void;
}

export function renderScaffoldPanel(
  client: ApiClient, taskId: string, initial: ScaffoldState,
  now: () => number = () => Date.now() / 1000,
): ScaffoldPanelHandle {
  const root = el("section", "panel panel-generator");
  root.appendChild(el("h2", "panel-title", "Example Generator"));

  const badge = el("span", "quota-badge");
  const button = el("button", "generate-button", "Generate Similar Example");
  const closeness = el("select", "closeness-select") as HTMLSelectElement;
  for (const value of ["far", "near"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value === "far" ? "farther (different story)" : "closer (similar story)";
    closeness.appendChild(option);
  }
  const status = el("div", "generator-status");
  const display = el("div", "scaffold-display");

  const controls = el("div", "generator-controls");
  controls.appendChild(button);
  controls.appendChild(closeness);
  controls.appendChild(badge);
  root.appendChild(controls);
  root.appendChild(status);
  root.appendChild(display);

  let inFlight = false;

  function apply(state: ScaffoldState): void {
    badge.textContent = `${state.remaining_quota} of ${state.quota} left`;
    closeness.hidden = !state.allow_near;
    if (state.locked) {
      button.disabled = true;
      if (state.unlock_at === null) {
        button.dataset.reason = "locked";
        status.textContent = "Run the task once to unlock scaffold examples.";
      } else {
        button.dataset.reason = "locked";
        const wait = Math.max(0, Math.ceil(state.unlock_at - now()));
        status.textContent = `Scaffolds unlock in ${wait}s.`;
      }
    } else if (state.remaining_quota <= 0) {
      button.disabled = true;
      button.dataset.reason = "quota";
      status.textContent = "Quota exhausted.";
    } else {
      button.disabled = inFlight;
      delete button.dataset.reason;
      if (!inFlight) status.textContent = "";
    }
  }

  async function generate(): Promise<void> {
    if (inFlight) return;
    inFlight = true;
    button.disabled = true;
    status.textContent = "Generating an example...";
    try {
      const chosen = !closeness.hidden && closeness.value === "near" ? "near" : "far";
      const response = await client.requestScaffold(taskId, chosen);
      badge.textContent = `${response.remaining_quota} left`;
      if (response.status === "granted") {
        display.replaceChildren(renderScaffold(response.scaffold));
        status.textContent = "";
      } else {
        display.replaceChildren();
        status.textContent = "Your example was generated and is waiting for instructor review.";
      }
    } catch (err) {
      if (err instanceof ApiError) {
        const notice = ERROR_NOTICES[err.status];
        status.textContent = notice ? notice(err.body) : `Request failed: ${err.body.detail ?? err.status}`;
        if (err.status === 429) {
          button.disabled = true;
          button.dataset.reason = "quota";
        }
      } else {
        status.textContent = "Request failed unexpectedly - check your connection.";
      }
    } finally {
      inFlight = false;
      if (!button.dataset.reason) button.disabled = false;
    }
  }

  button.onclick = () => { void generate(); };
  apply(initial);
  return { root, refresh: apply };
}
