// Pure HTML renderers: data in, markup out. No fetching, no mutation —
// decision buttons only emit data-attributes that app.ts binds to clicks.

import type {
  AuditRecordView,
  ComponentStatus,
  DiffHunk,
  PendingAction,
  ReflectionFeedback,
} from "./model.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

function badgeClass(status: ComponentStatus["last_status"]): string {
  if (status === "Compliant") return "badge badge-green";
  if (status === "Non-Compliant") return "badge badge-red";
  return "badge badge-grey";
}

function check(flag: boolean): string {
  return flag ? '<span class="check pass">✓</span>' : '<span class="check fail">✗</span>';
}

export function renderStatusGrid(components: ComponentStatus[]): string {
  const rows = components
    .map((component) => {
      const checked = component.last_checked_at
        ? escapeHtml(component.last_checked_at)
        : "never";
      const pending = component.pending_action_id
        ? `<a href="#pending" class="pending-link">${escapeHtml(component.pending_action_id)}</a>`
        : "—";
      return `<tr data-component="${escapeHtml(component.component_id)}">
  <td>${escapeHtml(component.component_id)}</td>
  <td><span class="${badgeClass(component.last_status)}">${escapeHtml(component.last_status)}</span></td>
  <td class="timestamp">${checked}</td>
  <td>${check(component.static_check_passed)}</td>
  <td>${check(component.dynamic_check_passed)}</td>
  <td>${pending}</td>
</tr>`;
    })
    .join("\n");
  return `<table class="status-grid">
<thead><tr><th>Component</th><th>Status</th><th>Last validated</th><th>Static</th><th>Dynamic</th><th>Pending action</th></tr></thead>
<tbody>
${rows}
</tbody>
</table>`;
}

function renderHunk(hunk: DiffHunk): string {
  const original = hunk.original_lines.map((line) => escapeHtml(line)).join("\n");
  const edited = hunk.edited_lines.map((line) => escapeHtml(line)).join("\n");
  return `<div class="hunk" data-group="${escapeHtml(hunk.group_path)}">
  <div class="hunk-header">${escapeHtml(hunk.group_path || "(document)")} · line ${hunk.original_start}</div>
  <div class="hunk-sides">
    <pre class="side original">${original}</pre>
    <pre class="side edited">${edited}</pre>
  </div>
</div>`;
}

function renderReflection(history: ReflectionFeedback[]): string {
  const entries = history
    .map((feedback, index) => {
      const issues = feedback.Issues.map(
        (issue) =>
          `<li><code>${escapeHtml(issue.id)}</code> [${escapeHtml(issue.type)}] ${escapeHtml(issue.description)} → ${escapeHtml(issue.required_action)}</li>`,
      ).join("");
      const mustFix = feedback.MustFixSummary.map((item) => `<li>${escapeHtml(item)}</li>`).join("");
      return `<details class="reflection" ${index === history.length - 1 ? "open" : ""}>
  <summary>Iteration ${index + 1}: ${escapeHtml(feedback.OverallAssessment)}</summary>
  <ul class="issues">${issues || "<li>no issues</li>"}</ul>
  ${mustFix ? `<div class="must-fix"><strong>Must fix</strong><ul>${mustFix}</ul></div>` : ""}
</details>`;
    })
    .join("\n");
  return `<section class="arbitration"><h4>Reflection history</h4>${entries}</section>`;
}

export function renderPendingReview(action: PendingAction): string {
  const violations = action.report.violations
    .map(
      (violation) =>
        `<li><code>${escapeHtml(violation.config_path)}</code> ${escapeHtml(violation.summary.split("\n")[0] ?? "")}</li>`,
    )
    .join("");
  const references = action.report.spec_references
    .map(
      (reference) =>
        `<li>${escapeHtml(reference.clause.split("\n")[0] ?? "")} <span class="filename">${escapeHtml(reference.filename)}</span></li>`,
    )
    .join("");
  const impacts = action.report.impacts
    .map((impact) => `<li>${escapeHtml(impact.split("\n")[0] ?? "")}</li>`)
    .join("");
  const hunks = action.diff.map(renderHunk).join("\n");
  const arbitration = action.needs_arbitration ? renderReflection(action.reflection_history) : "";
  return `<article class="pending-action" data-action-id="${escapeHtml(action.action_id)}">
  <header>
    <h3>${escapeHtml(action.component_id)} · ${escapeHtml(action.action_id)}</h3>
    <span class="state">${escapeHtml(action.state)}</span>
    ${action.needs_arbitration ? '<span class="badge badge-amber">needs arbitration</span>' : ""}
  </header>
  <section><h4>Violations (${action.report.violations.length})</h4><ul class="violations">${violations}</ul></section>
  <section><h4>Specification references</h4><ul class="references">${references}</ul></section>
  <section><h4>Security impact</h4><ul class="impacts">${impacts}</ul></section>
  <section><h4>Proposed change</h4><div class="diff">${hunks}</div></section>
  ${arbitration}
  <footer class="decision">
    <label>Operator <input type="text" class="operator-name" placeholder="operator id"></label>
    <button type="button" data-decision="approve" data-action-id="${escapeHtml(action.action_id)}">Approve &amp; apply</button>
    <button type="button" data-decision="reject" data-action-id="${escapeHtml(action.action_id)}">Reject</button>
  </footer>
</article>`;
}

export function renderPendingList(actions: PendingAction[]): string {
  if (actions.length === 0) {
    return '<p class="empty">No pending remediations.</p>';
  }
  return actions.map(renderPendingReview).join("\n");
}

export function renderHistory(records: AuditRecordView[], page = 0, pageSize = 20): string {
  const start = page * pageSize;
  const slice = records.slice(start, start + pageSize);
  const rows = slice
    .map(
      (record) => `<tr>
  <td>${record.seq}</td>
  <td class="timestamp">${escapeHtml(record.timestamp)}</td>
  <td>${escapeHtml(record.kind)}</td>
  <td><code>${escapeHtml(JSON.stringify(record.payload))}</code></td>
</tr>`,
    )
    .join("\n");
  const pages = Math.max(1, Math.ceil(records.length / pageSize));
  return `<table class="history">
<thead><tr><th>#</th><th>When</th><th>Event</th><th>Payload</th></tr></thead>
<tbody>
${rows}
</tbody>
</table>
<nav class="pager">page ${page + 1} of ${pages}</nav>`;
}

export function renderErrorToast(message: string, correlationId = ""): string {
  const suffix = correlationId ? ` <span class="correlation">[${escapeHtml(correlationId)}]</span>` : "";
  return `<div class="toast error" role="alert">${escapeHtml(message)}${suffix}</div>`;
}

export function renderReportPanel(runId: string, markdown: string): string {
  return `<section class="report" data-run-id="${escapeHtml(runId)}">
  <header>
    <h3>Compliance report ${escapeHtml(runId)}</h3>
    <button type="button" data-download="md" data-run-id="${escapeHtml(runId)}">Download .md</button>
    <button type="button" data-download="json" data-run-id="${escapeHtml(runId)}">Download .json</button>
  </header>
  <pre class="report-body">${escapeHtml(markdown)}</pre>
</section>`;
}
