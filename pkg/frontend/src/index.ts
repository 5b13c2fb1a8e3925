/**
 * Buffer-level bindings for the inaug augmentation engine.
 *
 * The engine consumes raw row-major RGB bytes and a serialized TOML
 * config; output is byte-identical to the engine's batch CLI for the
 * same (config, seed, epoch, index) on the same pixels. No file I/O
 * happens on the call path.
 */
import { EngineError, callBridge } from './bridge.js';

export { EngineError };

/** A borrowed RGB byte buffer; the engine never writes into `data`. */
export interface BufferDescriptor {
  height: number;
  width: number;
  /** Fixed at 3 (interleaved RGB). */
  channels?: number;
  data: Uint8Array;
}

function checkDescriptor(buf: BufferDescriptor): void {
  const channels = buf.channels ?? 3;
  if (channels !== 3) {
    throw new EngineError('BadBuffer', `only 3-channel buffers are supported, got ${channels}`);
  }
  if (!Number.isInteger(buf.height) || !Number.isInteger(buf.width) || buf.height < 1 || buf.width < 1) {
    throw new EngineError('BadBuffer', `buffer dims must be positive integers, got ${buf.width}x${buf.height}`);
  }
  const expected = buf.height * buf.width * 3;
  if (buf.data.length !== expected) {
    throw new EngineError('BadBuffer', `buffer holds ${buf.data.length} bytes, expected ${expected}`);
  }
}

/**
 * Augment one pixel buffer. Returns a newly allocated output buffer and
 * leaves the input untouched; throws {@link EngineError} carrying the
 * engine's diagnostics when the config text is malformed.
 */
export function augmentBuffer(
  buf: BufferDescriptor,
  configText: string,
  seed: number,
  epoch = 0,
  index = 0,
): BufferDescriptor {
  checkDescriptor(buf);
  const config = Buffer.from(configText, 'utf8');
  const reply = callBridge(
    {
      op: 'augment',
      height: buf.height,
      width: buf.width,
      seed,
      epoch,
      index,
      config_bytes: config.length,
    },
    Buffer.concat([config, Buffer.from(buf.data)]),
  );
  const height = Number(reply.header.height);
  const width = Number(reply.header.width);
  const expected = height * width * 3;
  if (reply.payload.length !== expected) {
    throw new EngineError('BadResponse', `expected ${expected} output bytes, got ${reply.payload.length}`);
  }
  return { height, width, channels: 3, data: new Uint8Array(reply.payload) };
}

/** Exact text of a shipped preset config, as the engine would load it. */
export function loadPreset(name: string): string {
  const reply = callBridge({ op: 'preset', name });
  return reply.payload.toString('utf8');
}

/** The engine's version string. */
export function version(): string {
  return String(callBridge({ op: 'version' }).header.version);
}
