/** Wire types for the line-delimited JSON discovery-session protocol. */

export interface SpeciesSummary {
  initial: number;
  final: number;
  min: number;
  max: number;
}

export interface ObservationPayload {
  iteration: number;
  trajectory_csv: string;
  summary: Record<string, SpeciesSummary>;
}

export interface PrfScores {
  precision: number;
  recall: number;
  f1: number;
}

export interface EvaluationPayload {
  ste: number;
  rms_with_modifiers: PrfScores;
  rms_without_modifiers: PrfScores;
  nts_overall: PrfScores;
  nts_per_category: Record<string, PrfScores>;
  robustness: [number, number][];
}

export interface StartResponse {
  id: number;
  ok: true;
  partial_sbml: string;
  manual: string;
  max_iterations: number;
  debug_attempts: number;
  iteration: number;
}

export interface ObservationResponse {
  id: number;
  ok: true;
  observation: ObservationPayload;
}

export interface SubmitResponse {
  id: number;
  ok: true;
  accepted: boolean;
  diagnostics: string[];
  debug_attempts_remaining: number;
  terminated: boolean;
  evaluation?: EvaluationPayload;
}

export interface HistoryResponse {
  id: number;
  ok: true;
  history: Record<string, ObservationPayload>;
}

export interface ErrorResponse {
  id: number | null;
  ok: false;
  error: { code: string; message: string };
}

export type Response =
  | StartResponse
  | ObservationResponse
  | SubmitResponse
  | HistoryResponse
  | ErrorResponse;

export type ExperimentAction =
  | { action: "observe"; meta_data: Record<string, never> }
  | { action: "change_initial_concentration"; meta_data: Record<string, number> }
  | { action: "species_knockout"; meta_data: { species_ids: string[] } };

/** A server refusal, carrying the protocol's stable error code. */
export class ProtocolError extends Error {
  constructor(
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ProtocolError";
  }
}

/** Trajectory CSV decoded into native arrays. */
export interface Trajectory {
  times: number[];
  columns: Record<string, number[]>;
}

export function decodeTrajectoryCsv(csv: string): Trajectory {
  const lines = csv.trim().split("\n");
  const header = lines[0].split(",");
  if (header[0] !== "Time") {
    throw new Error(`trajectory CSV must start with a Time column, got ${header[0]}`);
  }
  const species = header.slice(1);
  const times: number[] = [];
  const columns: Record<string, number[]> = {};
  for (const sid of species) {
    columns[sid] = [];
  }
  for (const line of lines.slice(1)) {
    const cells = line.split(",").map(Number);
    times.push(cells[0]);
    species.forEach((sid, j) => columns[sid].push(cells[j + 1]));
  }
  return { times, columns };
}
