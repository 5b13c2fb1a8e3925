/**
 * Line-framed stdio client for the engine's buffer bridge.
 *
 * Each call spawns `python -m inaug.bridge`, writes one JSON header line
 * plus raw payload bytes, and reads one JSON response line plus payload.
 * Spawning per call keeps the API free of shared mutable state, so
 * concurrent callers are independent by construction.
 */
import { spawnSync } from 'node:child_process';

/** Raised for every engine-reported or transport failure. */
export class EngineError extends Error {
  constructor(
    readonly kind: string,
    message: string,
  ) {
    super(message);
    this.name = 'EngineError';
  }
}

export interface BridgeReply {
  header: Record<string, unknown>;
  payload: Buffer;
}

function pythonExecutable(): string {
  return process.env.INAUG_PYTHON ?? 'python3';
}

export function callBridge(header: object, payload: Buffer = Buffer.alloc(0)): BridgeReply {
  const input = Buffer.concat([Buffer.from(`${JSON.stringify(header)}\n`, 'utf8'), payload]);
  const result = spawnSync(pythonExecutable(), ['-m', 'inaug.bridge'], {
    input,
    maxBuffer: 1 << 28,
  });
  if (result.error) {
    throw new EngineError('SpawnFailure', `cannot run the engine bridge: ${result.error.message}`);
  }
  if (result.status !== 0) {
    throw new EngineError('BridgeExit', result.stderr.toString('utf8').trim() || `exit ${result.status}`);
  }
  const out = result.stdout;
  const newline = out.indexOf(0x0a);
  if (newline < 0) {
    throw new EngineError('BadResponse', 'bridge produced no response header');
  }
  let parsed: Record<string, unknown>;
  try {
    parsed = JSON.parse(out.subarray(0, newline).toString('utf8'));
  } catch (err) {
    throw new EngineError('BadResponse', `unparseable bridge header: ${String(err)}`);
  }
  if (parsed.ok !== true) {
    throw new EngineError(String(parsed.kind ?? 'Enginefailure'), String(parsed.error ?? 'unknown engine error'));
  }
  return { header: parsed, payload: out.subarray(newline + 1) };
}
