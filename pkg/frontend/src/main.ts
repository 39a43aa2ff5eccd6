// Bootstrap: read connection settings, list tasks, mount the workspace (or
// the review screen for instructors via #review).

import { HttpApiClient } from "./api";
import { renderReviewScreen } from "./review";
import { renderWorkspace } from "./workspace";

function setting(key: string, fallback: string): string {
  return localStorage.getItem(key) ?? fallback;
}

async function boot(): Promise<void> {
  const container = document.getElementById("app");
  if (!container) throw new Error("missing #app container");

  const client = new HttpApiClient(
    setting("codescaffold.baseUrl", "http://127.0.0.1:8000"),
    setting("codescaffold.token", ""),
  );

  if (window.location.hash === "#review") {
    const screen = await renderReviewScreen(client);
    container.replaceChildren(screen.root);
    return;
  }

  const tasks = await client.listTasks();
  const picker = document.createElement("select");
  picker.className = "task-picker";
  for (const task of tasks) {
    const option = document.createElement("option");
    option.value = task.id;
    option.textContent = `${task.title} (${task.id})`;
    picker.appendChild(option);
  }

  const mount = document.createElement("div");
  mount.className = "workspace-mount";

  async function open(taskId: string): Promise<void> {
    const task = await client.getTask(taskId);
    const workspace = renderWorkspace(client, task);
    mount.replaceChildren(workspace.root);
  }

  picker.onchange = () => { void open(picker.value); };
  container.replaceChildren(picker, mount);
  if (tasks.length > 0) {
    await open(tasks[0].id);
  }
}

void boot().catch((err) => {
  const container = document.getElementById("app");
  if (container) {
    const notice = document.createElement("p");
    notice.className = "boot-error";
    notice.textContent = `Could not reach the service: ${err}. Retry after checking the base URL and token.`;
    const retry = document.createElement("button");
    retry.textContent = "Retry";
    retry.onclick = () => window.location.reload();
    container.replaceChildren(notice, retry);
  }
});
