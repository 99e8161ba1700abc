// View-model types mirroring the service JSON payloads.

export type ComplianceStatusLabel = "Compliant" | "Non-Compliant" | "Unknown";

export interface ComponentStatus {
  component_id: string;
  last_status: ComplianceStatusLabel;
  last_checked_at: string | null;
  static_check_passed: boolean;
  dynamic_check_passed: boolean;
  pending_action_id: string | null;
}

export interface Violation {
  summary: string;
  config_path: string;
}

export interface SpecReference {
  clause: string;
  filename: string;
}

export interface Report {
  status: "Compliant" | "Non-Compliant";
  violations: Violation[];
  spec_references: SpecReference[];
  modifications: string[];
  impacts: string[];
  out_of_scope: string[];
  corrected_config: string | null;
  raw_text: string;
}

// Hunks come from the service's diff data; the client never diffs raw text.
export interface DiffHunk {
  original_start: number;
  original_lines: string[];
  edited_start: number;
  edited_lines: string[];
  group_path: string;
}

export interface ReflectionIssue {
  id: string;
  type: string;
  description: string;
  required_action: string;
}

export interface ReflectionFeedback {
  OverallAssessment: string;
  Issues: ReflectionIssue[];
  MustFixSummary: string[];
}

export type ActionStateLabel =
  | "Pending"
  | "Approved"
  | "Rejected"
  | "Applied"
  | "RolledBack"
  | "Failed";

export interface PendingAction {
  action_id: string;
  component_id: string;
  proposed_config: string;
  report: Report;
  loop_outcome_ref: string;
  state: ActionStateLabel;
  needs_arbitration: boolean;
  created_at: string;
  decided_at: string | null;
  applied_at: string | null;
  decided_by: string | null;
  history: [string, string][];
  diff: DiffHunk[];
  reflection_history: ReflectionFeedback[];
}

export interface AuditRecordView {
  seq: number;
  timestamp: string;
  kind: string;
  payload: Record<string, unknown>;
  payload_digest: string;
  prev_hash: string;
  hash: string;
}

export interface RunView {
  run_id: string;
  component_id: string;
  mode: string;
  state: "running" | "done" | "failed";
  submitted_at: string;
  finished_at: string | null;
  outcome: Record<string, unknown> | null;
  error: string | null;
  kind: string;
}

export interface ApiError {
  code: "BadRequest" | "NotFound" | "Conflict" | "Internal";
  message: string;
  correlation_id: string;
}
