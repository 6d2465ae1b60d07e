// The sequence editor panel: action rows in execution order with status
// coloring, the automatic checkbox, and the Manually button. Expanding a row
// shows its kind-specific fields; every edit becomes one engine command.

import type { CommandClient, SequenceObj } from "./protocol.js";
import type { ExecutorView } from "./sceneState.js";

const STATUS_COLORS: Record<string, string> = {
  pending: "#9aa0a6",
  executing: "#f9ab00",
  succeeded: "#34a853",
  failed: "#ea4335",
};

export interface PanelCallbacks {
  onSelectAction(index: number): void;
}

export class SequencePanel {
  private root: HTMLElement;
  private listEl: HTMLElement;
  private autoEl: HTMLInputElement;
  private expanded = new Set<number>();

  constructor(container: HTMLElement, private client: CommandClient,
              private callbacks: PanelCallbacks) {
    this.root = document.createElement("div");
    this.root.className = "sequence-panel";
    container.appendChild(this.root);

    const controls = document.createElement("div");
    controls.className = "controls";
    this.autoEl = document.createElement("input");
    this.autoEl.type = "checkbox";
    this.autoEl.id = "automatic";
    this.autoEl.addEventListener("change", () => {
      this.client.command("set_automatic", { on: this.autoEl.checked });
    });
    const autoLabel = document.createElement("label");
    autoLabel.htmlFor = "automatic";
    autoLabel.textContent = "Automatic";
    const manualBtn = document.createElement("button");
    manualBtn.textContent = "Manually";
    manualBtn.title = "Execute only the currently selected action";
    manualBtn.addEventListener("click", () => {
      this.client.command("execute_manual", {});
    });
    const abortBtn = document.createElement("button");
    abortBtn.textContent = "Abort";
    abortBtn.addEventListener("click", () => this.client.command("abort", {}));
    controls.append(this.autoEl, autoLabel, manualBtn, abortBtn);
    this.root.appendChild(controls);

    this.listEl = document.createElement("div");
    this.listEl.className = "action-list";
    this.root.appendChild(this.listEl);
  }

  render(sequence: SequenceObj, executor: ExecutorView): void {
    this.autoEl.checked = executor.mode === "automatic";
    this.listEl.textContent = "";
    sequence.actions.forEach((action, index) => {
      const row = document.createElement("div");
      row.className = "action-row";
      const status = executor.statuses[index] ?? "pending";
      row.style.borderLeft = `6px solid ${STATUS_COLORS[status] ?? "#999"}`;
      if (index === executor.selected) row.classList.add("selected");

      const header = document.createElement("div");
      header.className = "action-header";
      header.textContent = `${index}. ${action.description}`;
      header.addEventListener("click", () => {
        this.callbacks.onSelectAction(index);
        if (this.expanded.has(index)) this.expanded.delete(index);
        else this.expanded.add(index);
        this.render(sequence, executor);
      });
      row.appendChild(header);

      if (this.expanded.has(index)) {
        const body = document.createElement("pre");
        body.className = "action-body";
        body.textContent = JSON.stringify(action, null, 2);
        row.appendChild(body);
        const remove = document.createElement("button");
        remove.textContent = "Remove";
        remove.addEventListener("click", () => {
          this.client.command("sequence_edit", { op: "remove", index });
        });
        row.appendChild(remove);
      }
      this.listEl.appendChild(row);
    });
  }
}
