import { NdjsonConnection } from "./ndjson.js";

/** Environment dimensions reported by the server's spec command. */
export interface EnvSpec {
  protocol: number;
  rows: number;
  cols: number;
  planes: number;
  materials: number;
  actionCount: number;
  maxSteps: number;
}

/** rows x cols x planes integer tensor, values in [0, 255]. */
export type Observation = number[][][];

export interface StepInfo {
  actionClass: "invalid" | "idle" | "delivery" | "neutral";
  deliveredBoxAge: number | null;
  oldestAvailableAge: number | null;
  validActionMask: boolean[];
}

export interface StepResult {
  observation: Observation;
  reward: number;
  done: boolean;
  info: StepInfo;
}

/** Error response from the server, surfaced with its protocol code. */
export class ProtocolError extends Error {
  readonly code: string;

  constructor(code: string, message: string) {
    super(`${code}: ${message}`);
    this.code = code;
  }
}

interface WireResponse {
  ok: boolean;
  code?: string;
  message?: string;
  [key: string]: unknown;
}

function expectOk(raw: unknown): WireResponse {
  const response = raw as WireResponse;
  if (!response || typeof response.ok !== "boolean") {
    throw new Error(`malformed server response: ${JSON.stringify(raw)}`);
  }
  if (!response.ok) {
    throw new ProtocolError(
      response.code ?? "unknown",
      response.message ?? "server error",
    );
  }
  return response;
}

/**
 * Remote environment client implementing the usual episodic interface
 * (reset / step / action and observation spaces) over the wire protocol.
 * Pure protocol client: every piece of game logic stays on the server.
 */
export class RemoteWarehouseEnv {
  private connection: NdjsonConnection;
  readonly spec: EnvSpec;
  private episodeActive = false;
  private lastObservation: Observation | null = null;

  private constructor(connection: NdjsonConnection, spec: EnvSpec) {
    this.connection = connection;
    this.spec = spec;
  }

  static async connect(host: string, port: number): Promise<RemoteWarehouseEnv> {
    const connection = await NdjsonConnection.connect(host, port);
    const raw = expectOk(await connection.request({ cmd: "spec" }));
    const spec: EnvSpec = {
      protocol: raw.protocol as number,
      rows: raw.r as number,
      cols: raw.c as number,
      planes: raw.d as number,
      materials: raw.m as number,
      actionCount: raw.actions as number,
      maxSteps: raw.max_steps as number,
    };
    if (spec.protocol !== 1) {
      connection.close();
      throw new Error(`unsupported protocol version ${spec.protocol}`);
    }
    return new RemoteWarehouseEnv(connection, spec);
  }

  get observationShape(): [number, number, number] {
    return [this.spec.rows, this.spec.cols, this.spec.planes];
  }

  get actionSpaceSize(): number {
    return this.spec.actionCount;
  }

  private checkObservation(obs: Observation): Observation {
    const [rows, cols, planes] = this.observationShape;
    if (obs.length !== rows || obs[0].length !== cols || obs[0][0].length !== planes) {
      throw new Error(
        `observation shape mismatch: expected ${rows}x${cols}x${planes}`,
      );
    }
    return obs;
  }

  async reset(seed?: number): Promise<Observation> {
    const request: Record<string, unknown> = { cmd: "reset" };
    if (seed !== undefined) request.seed = seed;
    const response = expectOk(await this.connection.request(request));
    this.episodeActive = true;
    this.lastObservation = this.checkObservation(
      response.observation as Observation,
    );
    return this.lastObservation;
  }

  /** Step by flat action index (row * cols + col). */
  async step(action: number): Promise<StepResult> {
    if (!this.episodeActive) {
      throw new Error("no active episode: call reset() before step()");
    }
    if (!Number.isInteger(action) || action < 0 || action >= this.actionSpaceSize) {
      throw new RangeError(
        `action ${action} outside the discrete space [0, ${this.actionSpaceSize})`,
      );
    }
    const response = expectOk(
      await this.connection.request({ cmd: "step", action }),
    );
    const info = response.info as Record<string, unknown>;
    const result: StepResult = {
      observation: this.checkObservation(response.observation as Observation),
      reward: response.reward as number,
      done: response.done as boolean,
      info: {
        actionClass: info.action_class as StepInfo["actionClass"],
        deliveredBoxAge: info.delivered_box_age as number | null,
        oldestAvailableAge: info.oldest_available_age as number | null,
        validActionMask: info.valid_action_mask as boolean[],
      },
    };
    this.lastObservation = result.observation;
    if (result.done) this.episodeActive = false;
    return result;
  }

  get observation(): Observation | null {
    return this.lastObservation;
  }

  async close(): Promise<void> {
    try {
      await this.connection.request({ cmd: "close" });
    } catch {
      // server may already have gone away; closing is best-effort
    }
    this.connection.close();
  }
}
