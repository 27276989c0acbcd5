import { ClientSession } from "./client.js";
import { changeableSpecies } from "./partial.js";
import { ProtocolError, SubmitResponse } from "./protocol.js";

/**
 * Deterministic 32-bit PRNG (mulberry32): good enough for a scripted agent,
 * reproducible across runs for a fixed seed.
 */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface BaselineOutcome {
  experimentsRun: number;
  submission: SubmitResponse;
}

/**
 * Scripted floor agent: performs `budget` random legal perturbations
 * (uniform rescalings of a random changeable species' initial
 * concentration), then submits the unmodified partial model. Server
 * refusals are handled, never propagated: an exhausted iteration budget
 * just forces the submission early.
 */
export async function runBaselineAgent(
  session: ClientSession,
  budget: number,
  seed = 0,
): Promise<BaselineOutcome> {
  const random = mulberry32(seed);
  const candidates = changeableSpecies(session.partialSbml);
  let experimentsRun = 0;

  for (let i = 0; i < budget; i++) {
    if (candidates.length === 0) {
      break;
    }
    const target = candidates[Math.floor(random() * candidates.length)];
    const scale = target.initialValue > 0 ? target.initialValue : 1.0;
    const value = random() * 2 * scale;
    try {
      await session.changeInitialConcentrations({ [target.id]: value });
      experimentsRun += 1;
    } catch (error) {
      if (error instanceof ProtocolError) {
        if (error.code === "iteration-budget-exhausted") {
          break;
        }
        continue; // refused perturbation; try another
      }
      throw error;
    }
  }

  const submission = await session.submit(session.partialSbml);
  return { experimentsRun, submission };
}
