// Payload shapes of the codescaffold HTTP service.

export interface IOExamplePayload {
  input: string;
  expected_output: string;
}

export interface ScaffoldState {
  first_run_at: number | null;
  unlock_at: number | null;
  locked: boolean;
  scaffolds_used: number;
  remaining_quota: number;
  quota: number;
  allow_near: boolean;
  fading: string;
  delay_s: number;
}

export interface TaskPayload {
  id: string;
  title: string;
  statement: string;
  reasoning_tags: string[];
  sample_io: IOExamplePayload[];
  usable: boolean;
  scaffold_state: ScaffoldState;
}

export interface MismatchPayload {
  line: number;
  expected: string | null;
  actual: string | null;
}

export interface VerdictPayload {
  label: string;
  mismatch: MismatchPayload | null;
}

export interface GradeReportPayload {
  verdicts: VerdictPayload[];
  all_pass: boolean;
}

export interface ExecutionPayload {
  status: string;
  stdout: string;
  stderr: string;
  duration_ms: number;
}

export type RunResponse =
  | { kind: "grade_report"; result: GradeReportPayload }
  | { kind: "execution"; result: ExecutionPayload };

export interface RelationEntryPayload {
  target_element: string;
  scaffold_element: string;
  note: string;
}

export interface RelationPayload {
  entries: RelationEntryPayload[];
  summary: string;
}

export type FadingLevel = "full" | "code_hidden" | "statement_only";

export interface ScaffoldPayload {
  id: string;
  task_id: string;
  statement: string;
  fading_level: FadingLevel;
  review_status: string;
  explanation?: string;
  relation?: RelationPayload | null;
  code?: string;
  candidate_io?: IOExamplePayload[];
}

export type ScaffoldResponse =
  | { status: "granted"; remaining_quota: number; scaffold: ScaffoldPayload }
  | { status: "pending_review"; scaffold_id: string; remaining_quota: number };

export interface ReviewItemPayload {
  scaffold_id: string;
  task_id: string;
  created_at: number;
  report: {
    structural_score: number;
    surface_score: number;
    quadrant: string;
  } | null;
  failure_reasons: string[];
}

export interface ErrorBody {
  error: string;
  detail: string;
  unlock_at?: number | null;
  retry_after_s?: number;
  verdicts?: string[];
}
