// Dashboard controller: 2s polling with ETag short-circuit, explicit
// operator decisions (no optimistic UI — the grid shows server state only).

import { ServiceClient, ServiceError } from "./api.js";
import type { Conditional } from "./api.js";
import type { ComponentStatus, PendingAction } from "./model.js";
import {
  renderErrorToast,
  renderHistory,
  renderPendingList,
  renderReportPanel,
  renderStatusGrid,
} from "./render.js";

export const POLL_INTERVAL_MS = 2000;

export interface PollSinks {
  grid: (html: string) => void;
  pending: (html: string) => void;
}

/** The slice of the client the poller needs (stubbed in tests). */
export interface PollSource {
  components(): Promise<Conditional<ComponentStatus[]>>;
  pendingActions(): Promise<Conditional<PendingAction[]>>;
}

/** Re-renders only when a poll actually returns new data (304 skips). */
export class PollController {
  gridRenders = 0;
  pendingRenders = 0;

  constructor(
    private readonly client: PollSource,
    private readonly sinks: PollSinks,
  ) {}

  async tick(): Promise<void> {
    const components = await this.client.components();
    if (components.changed && components.body !== null) {
      this.gridRenders += 1;
      this.sinks.grid(renderStatusGrid(components.body));
    }
    const pending = await this.client.pendingActions();
    if (pending.changed && pending.body !== null) {
      this.pendingRenders += 1;
      this.sinks.pending(renderPendingList(pending.body));
    }
  }
}

function element(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function showToast(message: string, correlationId = ""): void {
  const toasts = element("toasts");
  toasts.insertAdjacentHTML("beforeend", renderErrorToast(message, correlationId));
  const toast = toasts.lastElementChild;
  if (toast) setTimeout(() => toast.remove(), 6000);
}

function triggerDownload(filename: string, text: string, mime: string): void {
  const blob = new Blob([text], { type: mime });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}

export function startDashboard(baseUrl: string): void {
  const client = new ServiceClient(baseUrl);
  const controller = new PollController(client, {
    grid: (html) => {
      element("status-grid").innerHTML = html;
    },
    pending: (html) => {
      element("pending-list").innerHTML = html;
    },
  });

  const poll = async () => {
    try {
      await controller.tick();
    } catch (error) {
      if (error instanceof ServiceError) showToast(error.message, error.correlationId);
      else showToast(String(error));
    }
  };
  void poll();
  setInterval(poll, POLL_INTERVAL_MS);

  // Mutations happen only here, on an explicit operator click.
  element("pending-list").addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    const decision = target.dataset["decision"];
    const actionId = target.dataset["actionId"];
    if (!decision || !actionId) return;
    const card = target.closest(".pending-action");
    const operatorInput = card?.querySelector<HTMLInputElement>(".operator-name");
    const operator = operatorInput?.value.trim() ?? "";
    if (!operator) {
      showToast("enter an operator id before deciding");
      return;
    }
    (target as HTMLButtonElement).disabled = true;
    try {
      if (decision === "approve") await client.approveAction(actionId, operator);
      else await client.rejectAction(actionId, operator);
      await poll(); // server state drives the UI; nothing optimistic
    } catch (error) {
      if (error instanceof ServiceError) showToast(error.message, error.correlationId);
      else showToast(String(error));
    } finally {
      (target as HTMLButtonElement).disabled = false;
    }
  });

  element("history-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const input = element("history-component") as HTMLInputElement;
    try {
      const records = await client.history(input.value.trim());
      element("history-panel").innerHTML = renderHistory(records);
    } catch (error) {
      if (error instanceof ServiceError) showToast(error.message, error.correlationId);
      else showToast(String(error));
    }
  });

  element("report-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const input = element("report-run-id") as HTMLInputElement;
    const runId = input.value.trim();
    try {
      const markdown = await client.downloadReport(runId, "md");
      element("report-panel").innerHTML = renderReportPanel(runId, markdown);
    } catch (error) {
      if (error instanceof ServiceError) showToast(error.message, error.correlationId);
      else showToast(String(error));
    }
  });

  element("report-panel").addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    const format = target.dataset["download"] as "md" | "json" | undefined;
    const runId = target.dataset["runId"];
    if (!format || !runId) return;
    try {
      const text = await client.downloadReport(runId, format);
      triggerDownload(
        `compliance-report-${runId}.${format}`,
        text,
        format === "md" ? "text/markdown" : "application/json",
      );
    } catch (error) {
      if (error instanceof ServiceError) showToast(error.message, error.correlationId);
      else showToast(String(error));
    }
  });
}
