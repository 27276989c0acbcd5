export { ClientSession } from "./client.js";
export { runBaselineAgent, mulberry32 } from "./baseline.js";
export { changeableSpecies, parsePartialSpecies } from "./partial.js";
export {
  decodeTrajectoryCsv,
  ProtocolError,
} from "./protocol.js";
export type {
  BaselineOutcome,
} from "./baseline.js";
export type {
  EvaluationPayload,
  ExperimentAction,
  ObservationPayload,
  PrfScores,
  Response,
  SpeciesSummary,
  StartResponse,
  SubmitResponse,
  Trajectory,
} from "./protocol.js";
