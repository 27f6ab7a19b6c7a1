export {
  ProtocolError,
  RemoteWarehouseEnv,
  type EnvSpec,
  type Observation,
  type StepInfo,
  type StepResult,
} from "./client.js";
export { TrajectoryDigest, cycleActions } from "./digest.js";
export { NdjsonConnection } from "./ndjson.js";
export { spawnLocalServer, type LocalServer } from "./spawn.js";
