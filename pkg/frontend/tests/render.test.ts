// Renderer units and the poll short-circuit probe.

import { describe, expect, it } from "vitest";

import type { Conditional } from "../src/api.js";
import { PollController } from "../src/app.js";
import type {
  AuditRecordView,
  ComponentStatus,
  PendingAction,
  Report,
} from "../src/model.js";
import {
  escapeHtml,
  renderErrorToast,
  renderHistory,
  renderPendingList,
  renderPendingReview,
  renderStatusGrid,
} from "../src/render.js";

function component(overrides: Partial<ComponentStatus> = {}): ComponentStatus {
  return {
    component_id: "cu-gnb",
    last_status: "Compliant",
    last_checked_at: "2026-08-10T12:00:00+00:00",
    static_check_passed: true,
    dynamic_check_passed: false,
    pending_action_id: null,
    ...overrides,
  };
}

function report(overrides: Partial<Report> = {}): Report {
  return {
    status: "Non-Compliant",
    violations: [
      { summary: "null ciphering preferred", config_path: "security.ciphering_algorithms" },
      { summary: "null integrity listed", config_path: "security.integrity_algorithms" },
      { summary: "bearer integrity disabled", config_path: "security.drb_integrity" },
    ],
    spec_references: [{ clause: "strong algorithms required", filename: "security_architecture_5g.md" }],
    modifications: ["replace nea0 with nea2"],
    impacts: ["user traffic readable in transit"],
    out_of_scope: [],
    corrected_config: "security = {};\n",
    raw_text: "Compliance Status: Non-Compliant",
    ...overrides,
  };
}

function pendingAction(overrides: Partial<PendingAction> = {}): PendingAction {
  return {
    action_id: "abcd1234abcd1234",
    component_id: "cu-gnb",
    proposed_config: "security = {};\n",
    report: report(),
    loop_outcome_ref: "run-1",
    state: "Pending",
    needs_arbitration: false,
    created_at: "2026-08-10T12:00:00+00:00",
    decided_at: null,
    applied_at: null,
    decided_by: null,
    history: [["Pending", "2026-08-10T12:00:00+00:00"]],
    diff: [
      {
        original_start: 50,
        original_lines: ['  ciphering_algorithms = ( "nea0" );'],
        edited_start: 50,
        edited_lines: ['  ciphering_algorithms = ( "nea2" );'],
        group_path: "security",
      },
    ],
    reflection_history: [],
    ...overrides,
  };
}

describe("status grid", () => {
  it("one red badge for a single non-compliant component", () => {
    const html = renderStatusGrid([
      component({ component_id: "cu" }),
      component({ component_id: "du", last_status: "Non-Compliant" }),
      component({ component_id: "ru" }),
    ]);
    expect(html.match(/badge-red/g)?.length).toBe(1);
    expect(html.match(/badge-green/g)?.length).toBe(2);
  });

  it("unknown component renders a grey badge and no timestamp", () => {
    const html = renderStatusGrid([
      component({ last_status: "Unknown", last_checked_at: null, static_check_passed: false }),
    ]);
    expect(html).toContain("badge-grey");
    expect(html).toContain("never");
  });

  it("shows validation timestamps and check indicators", () => {
    const html = renderStatusGrid([component()]);
    expect(html).toContain("2026-08-10T12:00:00+00:00");
    expect(html).toContain('class="check pass"');
    expect(html).toContain('class="check fail"');
  });
});

describe("pending review", () => {
  it("renders violations, filenames, impacts, and server-provided hunks", () => {
    const html = renderPendingReview(pendingAction());
    expect(html).toContain("Violations (3)");
    expect(html).toContain("security.ciphering_algorithms");
    expect(html).toContain("security_architecture_5g.md");
    expect(html).toContain("user traffic readable in transit");
    expect(html).toContain('data-group="security"');
    expect(html).toContain("nea0");
    expect(html).toContain("nea2");
  });

  it("decision buttons carry the action id and no inline handlers", () => {
    const html = renderPendingReview(pendingAction());
    expect(html).toContain('data-decision="approve" data-action-id="abcd1234abcd1234"');
    expect(html).toContain('data-decision="reject"');
    expect(html).not.toContain("onclick");
  });

  it("escalated actions expose the reflection history for arbitration", () => {
    const html = renderPendingReview(
      pendingAction({
        needs_arbitration: true,
        reflection_history: [
          {
            OverallAssessment: "unresolved disagreement",
            Issues: [{ id: "I1", type: "UnderChange", description: "missed one", required_action: "fix" }],
            MustFixSummary: ["fix"],
          },
        ],
      }),
    );
    expect(html).toContain("needs arbitration");
    expect(html).toContain("Reflection history");
    expect(html).toContain("unresolved disagreement");
    expect(html).toContain("UnderChange");
  });

  it("escapes hostile text", () => {
    const html = renderPendingList([
      pendingAction({
        report: report({
          violations: [{ summary: "<script>alert(1)</script>", config_path: "security.x" }],
        }),
      }),
    ]);
    expect(html).not.toContain("<script>alert(1)</script>");
    expect(html).toContain("&lt;script&gt;");
  });

  it("empty queue renders a quiet message", () => {
    expect(renderPendingList([])).toContain("No pending remediations");
  });
});

describe("history and toasts", () => {
  const record = (seq: number): AuditRecordView => ({
    seq,
    timestamp: "2026-08-10T12:00:00+00:00",
    kind: "ActionDecided",
    payload: { component_id: "cu-gnb" },
    payload_digest: "d",
    prev_hash: "p",
    hash: "h",
  });

  it("paginates", () => {
    const records = Array.from({ length: 45 }, (_, i) => record(i));
    const pageOne = renderHistory(records, 0, 20);
    expect(pageOne).toContain("page 1 of 3");
    expect(pageOne).toContain("<td>0</td>");
    expect(pageOne).not.toContain("<td>20</td>");
    const pageTwo = renderHistory(records, 1, 20);
    expect(pageTwo).toContain("<td>20</td>");
  });

  it("error toast carries the correlation id", () => {
    const html = renderErrorToast("Conflict: already decided", "abc123");
    expect(html).toContain("Conflict: already decided");
    expect(html).toContain("abc123");
  });

  it("escapeHtml covers the metacharacters", () => {
    expect(escapeHtml(`<a href="x">&'</a>`)).toBe("&lt;a href=&quot;x&quot;&gt;&amp;&#39;&lt;/a&gt;");
  });
});

describe("poll short-circuit probe", () => {
  function stub(componentBatches: Array<Conditional<ComponentStatus[]>>, pendingBatches: Array<Conditional<PendingAction[]>>) {
    let c = 0;
    let p = 0;
    return {
      components: async () => componentBatches[Math.min(c++, componentBatches.length - 1)]!,
      pendingActions: async () => pendingBatches[Math.min(p++, pendingBatches.length - 1)]!,
    };
  }

  it("re-renders only when the poll reports a change", async () => {
    const fresh: Conditional<ComponentStatus[]> = { changed: true, etag: '"1"', body: [component()] };
    const unchanged: Conditional<ComponentStatus[]> = { changed: false, etag: '"1"', body: null };
    const noPending: Conditional<PendingAction[]> = { changed: true, etag: '"2"', body: [] };
    const pendingUnchanged: Conditional<PendingAction[]> = { changed: false, etag: '"2"', body: null };

    const grid: string[] = [];
    const pending: string[] = [];
    const controller = new PollController(
      stub([fresh, unchanged, unchanged], [noPending, pendingUnchanged, pendingUnchanged]),
      { grid: (html) => grid.push(html), pending: (html) => pending.push(html) },
    );
    await controller.tick();
    await controller.tick();
    await controller.tick();
    expect(controller.gridRenders).toBe(1);
    expect(controller.pendingRenders).toBe(1);
    expect(grid.length).toBe(1);
    expect(pending.length).toBe(1);
  });

  it("renders again when data actually changes", async () => {
    const first: Conditional<ComponentStatus[]> = { changed: true, etag: '"1"', body: [component()] };
    const same: Conditional<ComponentStatus[]> = { changed: false, etag: '"1"', body: null };
    const second: Conditional<ComponentStatus[]> = {
      changed: true,
      etag: '"2"',
      body: [component({ last_status: "Non-Compliant" })],
    };
    const emptyPending: Conditional<PendingAction[]> = { changed: true, etag: '"9"', body: [] };
    const pendingSame: Conditional<PendingAction[]> = { changed: false, etag: '"9"', body: null };

    const controller = new PollController(
      stub([first, same, second], [emptyPending, pendingSame, pendingSame]),
      { grid: () => undefined, pending: () => undefined },
    );
    await controller.tick();
    await controller.tick();
    await controller.tick();
    expect(controller.gridRenders).toBe(2);
  });
});
