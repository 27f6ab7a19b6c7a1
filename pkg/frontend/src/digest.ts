import { createHash } from "node:crypto";

import type { Observation } from "./client.js";

/**
 * Canonical trajectory digest (see PROTOCOL.md): observations flattened
 * row-major and comma-joined, rewards with exactly three decimals, done as
 * 1/0, the mask as a 0/1 string; lines joined with LF and hashed SHA-256.
 */
export class TrajectoryDigest {
  private lines: string[] = [];

  addReset(observation: Observation): void {
    this.lines.push(`reset:${flattenObservation(observation)}`);
  }

  addStep(
    observation: Observation,
    reward: number,
    done: boolean,
    mask: boolean[],
  ): void {
    const bits = mask.map((b) => (b ? "1" : "0")).join("");
    this.lines.push(
      `step:${flattenObservation(observation)};${reward.toFixed(3)};${done ? 1 : 0};${bits}`,
    );
  }

  hexDigest(): string {
    return createHash("sha256").update(this.lines.join("\n"), "utf8").digest("hex");
  }
}

function flattenObservation(observation: Observation): string {
  const parts: string[] = [];
  for (const row of observation) {
    for (const cell of row) {
      for (const value of cell) {
        parts.push(String(value));
      }
    }
  }
  return parts.join(",");
}

/** Stock probe sequence: action t % actionCount at step t. */
export function cycleActions(steps: number, actionCount: number): number[] {
  return Array.from({ length: steps }, (_, t) => t % actionCount);
}
