// The three-panel student workspace: task description (left), code editor
// with run/submit and a console (center), example generator (right).

import type { ApiClient } from "./api";
import { ApiError } from "./api";
import { renderScaffoldPanel, type ScaffoldPanelHandle } from "./scaffoldPanel";
import type { GradeReportPayload, RunResponse, TaskPayload } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export const TRUNCATION_MARKER = "\n--- output truncated at the task limit ---";

function renderVerdicts(container: HTMLElement, report: GradeReportPayload): void {
  const list = el("ul", "verdict-checklist");
  report.verdicts.forEach((verdict, index) => {
    const item = el("li", `verdict verdict-${verdict.label.toLowerCase()}`);
    const mark = verdict.label === "Pass" ? "[ok]" : "[x]";
    let text = `${mark} example ${index + 1}: ${verdict.label}`;
    if (verdict.mismatch) {
      text += ` (line ${verdict.mismatch.line}: expected ${JSON.stringify(verdict.mismatch.expected)}, got ${JSON.stringify(verdict.mismatch.actual)})`;
    }
    item.textContent = text;
    list.appendChild(item);
  });
  const summary = el("div", report.all_pass ? "verdict-summary all-pass" : "verdict-summary has-failures",
    report.all_pass ? "All examples pass." : "Some examples fail.");
  container.replaceChildren(summary, list);
}

export interface WorkspaceHandle {
  root: HTMLElement;
  editor: HTMLTextAreaElement;
  consoleOutput: HTMLPreElement;
  scaffoldPanel: ScaffoldPanelHandle;
}

export function renderWorkspace(client: ApiClient, task: TaskPayload): WorkspaceHandle {
  const root = el("div", "workspace");

  // left: task description and sample pairs
  const taskPanel = el("section", "panel panel-task");
  taskPanel.appendChild(el("h2", "panel-title", task.title));
  taskPanel.appendChild(el("p", "task-statement", task.statement));
  const samples = el("ul", "sample-io");
  for (const pair of task.sample_io) {
    samples.appendChild(el("li", "sample-pair",
      `input: ${JSON.stringify(pair.input)} -> output: ${JSON.stringify(pair.expected_output)}`));
  }
  taskPanel.appendChild(el("h3", "panel-subtitle", "Sample input/output"));
  taskPanel.appendChild(samples);
  root.appendChild(taskPanel);

  // center: editor, run/submit controls, console, verdicts
  const editorPanel = el("section", "panel panel-editor");
  editorPanel.appendChild(el("h2", "panel-title", "Code Editor"));
  const editor = el("textarea", "editor") as HTMLTextAreaElement;
  editor.rows = 16;
  editor.spellcheck = false;
  editorPanel.appendChild(editor);

  const controls = el("div", "editor-controls");
  const runButton = el("button", "run-button", "Run samples");
  const customButton = el("button", "run-custom-button", "Run with custom input");
  const submitButton = el("button", "submit-button", "Submit");
  const stdinInput = el("textarea", "custom-stdin") as HTMLTextAreaElement;
  stdinInput.rows = 2;
  stdinInput.placeholder = "custom stdin";
  controls.append(runButton, customButton, stdinInput, submitButton);
  editorPanel.appendChild(controls);

  editorPanel.appendChild(el("h3", "panel-subtitle", "Console"));
  const consoleOutput = el("pre", "console-output") as HTMLPreElement;
  editorPanel.appendChild(consoleOutput);
  const verdictArea = el("div", "verdict-area");
  editorPanel.appendChild(verdictArea);
  root.appendChild(editorPanel);

  // right: the generator panel
  const scaffoldPanel = renderScaffoldPanel(client, task.id, task.scaffold_state);
  root.appendChild(scaffoldPanel.root);

  let runInFlight = false;

  function showRunResponse(response: RunResponse): void {
    if (response.kind === "execution") {
      let text = response.result.stdout;
      if (response.result.status === "OutputTruncated") {
        text += TRUNCATION_MARKER;
      }
      consoleOutput.textContent = text;
      if (response.result.status !== "Completed" && response.result.status !== "OutputTruncated") {
        consoleOutput.textContent += `\n[${response.result.status}]\n${response.result.stderr}`;
      }
      verdictArea.replaceChildren();
    } else {
      consoleOutput.textContent = "";
      renderVerdicts(verdictArea, response.result);
    }
  }

  async function doRun(action: () => Promise<RunResponse>): Promise<void> {
    if (runInFlight) return;
    runInFlight = true;
    runButton.disabled = customButton.disabled = submitButton.disabled = true;
    try {
      showRunResponse(await action());
      const fresh = await client.getTask(task.id);
      scaffoldPanel.refresh(fresh.scaffold_state);
    } catch (err) {
      if (err instanceof ApiError && err.status === 503) {
        consoleOutput.textContent = `The run service is busy - retry in ${err.body.retry_after_s ?? 1}s.`;
      } else if (err instanceof ApiError) {
        consoleOutput.textContent = `Run failed: ${err.body.detail ?? err.status}`;
      } else {
        consoleOutput.textContent = "Run failed unexpectedly.";
      }
    } finally {
      runInFlight = false;
      runButton.disabled = customButton.disabled = submitButton.disabled = false;
    }
  }

  runButton.onclick = () => { void doRun(() => client.run(task.id, editor.value, "sample", "")); };
  customButton.onclick = () => { void doRun(() => client.run(task.id, editor.value, "custom", stdinInput.value)); };
  submitButton.onclick = () => { void doRun(() => client.submit(task.id, editor.value)); };

  return { root, editor, consoleOutput, scaffoldPanel };
}
