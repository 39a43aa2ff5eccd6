// Instructor review screen: pending scaffolds oldest-first with similarity
// scores and failure reasons; approve / reject / edit-and-approve actions.
// Edits are re-validated server-side; a refused edit surfaces the failing
// verdicts inline and blocks the decision.

import { ApiError, type ApiClient } from "./api";
import type { ReviewItemPayload } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface ReviewScreenHandle {
  root: HTMLElement;
  reload(): Promise<void>;
}

async function renderCard(client: ApiClient, item: ReviewItemPayload,
                          onRemoved: (card: HTMLElement) => void): Promise<HTMLElement> {
  const card = el("article", "review-card");
  card.dataset.scaffoldId = item.scaffold_id;

  const title = el("h3", "review-card-title",
    `Scaffold ${item.scaffold_id} for task ${item.task_id}`);
  card.appendChild(title);

  if (item.report) {
    card.appendChild(el("p", "review-scores",
      `quadrant ${item.report.quadrant} | structural ${item.report.structural_score.toFixed(2)} | surface ${item.report.surface_score.toFixed(2)}`));
  } else {
    card.appendChild(el("p", "review-scores", "no similarity report (no candidate parsed)"));
  }

  if (item.failure_reasons.length > 0) {
    const reasons = el("ul", "review-failures");
    for (const reason of item.failure_reasons) {
      reasons.appendChild(el("li", "review-failure", reason));
    }
    card.appendChild(reasons);
  }

  const detail = await client.getScaffold(item.scaffold_id);
  const scaffold = detail.scaffold;
  card.appendChild(el("p", "review-statement", scaffold.statement));
  const codeBox = el("textarea", "review-code-editor") as HTMLTextAreaElement;
  codeBox.rows = 10;
  codeBox.value = scaffold.code ?? "";
  card.appendChild(codeBox);

  const notice = el("div", "review-notice");
  const actions = el("div", "review-actions");
  const approve = el("button", "approve-button", "Approve");
  const reject = el("button", "reject-button", "Reject");
  const saveEdit = el("button", "edit-approve-button", "Save edit + approve");
  actions.append(approve, reject, saveEdit);
  card.appendChild(actions);
  card.appendChild(notice);

  async function decide(decision: string, edits?: Record<string, string>): Promise<void> {
    approve.disabled = reject.disabled = saveEdit.disabled = true;
    try {
      await client.decideReview(item.scaffold_id, decision, edits);
      onRemoved(card);
    } catch (err) {
      approve.disabled = reject.disabled = saveEdit.disabled = false;
      if (err instanceof ApiError && err.status === 422) {
        const verdicts = err.body.verdicts?.join(", ") ?? "";
        notice.textContent = `Edit refused: ${err.body.detail}${verdicts ? ` [${verdicts}]` : ""}`;
        notice.className = "review-notice edit-refused";
      } else if (err instanceof ApiError && err.status === 409) {
        notice.textContent = "Already decided elsewhere - refreshing the queue.";
        onRemoved(card);
      } else {
        notice.textContent = "Decision failed - try again.";
      }
    }
  }

  approve.onclick = () => { void decide("Approved"); };
  reject.onclick = () => { void decide("Rejected"); };
  saveEdit.onclick = () => { void decide("EditedAndApproved", { code: codeBox.value }); };
  return card;
}

export async function renderReviewScreen(client: ApiClient): Promise<ReviewScreenHandle> {
  const root = el("div", "review-screen");
  root.appendChild(el("h2", "panel-title", "Scaffolds waiting for review"));
  const list = el("div", "review-list");
  const empty = el("p", "review-empty", "Nothing waiting for review.");
  root.appendChild(list);
  root.appendChild(empty);

  function removeCard(card: HTMLElement): void {
    card.remove();
    empty.hidden = list.children.length > 0;
  }

  async function reload(): Promise<void> {
    const items = await client.reviewQueue();
    const cards = await Promise.all(items.map((item) => renderCard(client, item, removeCard)));
    list.replaceChildren(...cards);
    empty.hidden = cards.length > 0;
  }

  await reload();
  return { root, reload };
}
