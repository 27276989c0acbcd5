import * as net from "node:net";
import * as readline from "node:readline";

import {
  ErrorResponse,
  ExperimentAction,
  HistoryResponse,
  ObservationPayload,
  ObservationResponse,
  ProtocolError,
  Response,
  StartResponse,
  SubmitResponse,
} from "./protocol.js";

interface Pending {
  resolve: (value: Response) => void;
  reject: (reason: Error) => void;
}

/**
 * One discovery session over a TCP line-delimited JSON connection.
 *
 * The session mirrors the server's experiment history: every successful
 * experiment's observation is cached under its iteration index, so
 * `history` matches the server transcript at all times.
 */
export class ClientSession {
  readonly history = new Map<number, ObservationPayload>();
  private nextId = 1;
  private closed = false;

  private constructor(
    private readonly socket: net.Socket,
    private readonly pending: Map<number, Pending>,
    readonly start: StartResponse,
  ) {}

  /** Connect and retrieve the start payload (partial model + manual). */
  static async connect(host: string, port: number): Promise<ClientSession> {
    const socket = await new Promise<net.Socket>((resolve, reject) => {
      const sock = net.createConnection({ host, port });
      sock.once("connect", () => resolve(sock));
      sock.once("error", reject);
    });

    const pending = new Map<number, Pending>();
    const rl = readline.createInterface({ input: socket });
    rl.on("line", (line) => {
      const message = JSON.parse(line) as Response;
      if (typeof message.id === "number") {
        const waiter = pending.get(message.id);
        if (waiter) {
          pending.delete(message.id);
          waiter.resolve(message);
        }
      }
    });
    socket.on("close", () => {
      for (const waiter of pending.values()) {
        waiter.reject(new Error("connection closed"));
      }
      pending.clear();
    });

    const startPromise = new Promise<Response>((resolve, reject) => {
      pending.set(1, { resolve, reject });
    });
    socket.write(JSON.stringify({ id: 1, type: "start" }) + "\n");
    const start = unwrap(await startPromise) as StartResponse;
    return new ClientSession(socket, pending, start);
  }

  get partialSbml(): string {
    return this.start.partial_sbml;
  }

  get manual(): string {
    return this.start.manual;
  }

  get maxIterations(): number {
    return this.start.max_iterations;
  }

  private request(payload: Record<string, unknown>): Promise<Response> {
    if (this.closed) {
      return Promise.reject(new Error("session is closed"));
    }
    const id = ++this.nextId;
    const promise = new Promise<Response>((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
    });
    this.socket.write(JSON.stringify({ id, ...payload }) + "\n");
    return promise;
  }

  /** Run one experiment; the observation is cached in `history`. */
  async requestExperiment(action: ExperimentAction): Promise<ObservationPayload> {
    const response = unwrap(
      await this.request({ type: "experiment", ...action }),
    ) as ObservationResponse;
    this.history.set(response.observation.iteration, response.observation);
    return response.observation;
  }

  observe(): Promise<ObservationPayload> {
    return this.requestExperiment({ action: "observe", meta_data: {} });
  }

  changeInitialConcentrations(
    overrides: Record<string, number>,
  ): Promise<ObservationPayload> {
    return this.requestExperiment({
      action: "change_initial_concentration",
      meta_data: overrides,
    });
  }

  knockoutSpecies(speciesIds: string[]): Promise<ObservationPayload> {
    return this.requestExperiment({
      action: "species_knockout",
      meta_data: { species_ids: speciesIds },
    });
  }

  async submit(sbml: string): Promise<SubmitResponse> {
    return unwrap(await this.request({ type: "submit", sbml })) as SubmitResponse;
  }

  /** Fetch the server-side history (for auditing the local mirror). */
  async fetchServerHistory(): Promise<Record<string, ObservationPayload>> {
    const response = unwrap(await this.request({ type: "get_history" })) as HistoryResponse;
    return response.history;
  }

  close(): void {
    this.closed = true;
    this.socket.destroy();
  }
}

function unwrap(response: Response): Response {
  if (!response.ok) {
    const err = (response as ErrorResponse).error;
    throw new ProtocolError(err.code, err.message);
  }
  return response;
}
