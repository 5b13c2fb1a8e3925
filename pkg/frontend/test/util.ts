/** Shared helpers for the binding tests. */
import { execFileSync } from 'node:child_process';
import { mkdtempSync, readFileSync, writeFileSync, mkdirSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

export const PYTHON = process.env.INAUG_PYTHON ?? 'python3';

/** Deterministic pixel noise (64-bit LCG), independent of the engine. */
export function testPixels(width: number, height: number, key: number): Uint8Array {
  const out = new Uint8Array(width * height * 3);
  let state = BigInt(key) * 2654435761n + 1n;
  const a = 6364136223846793005n;
  const c = 1442695040888963407n;
  const mask = (1n << 64n) - 1n;
  for (let i = 0; i < out.length; i++) {
    state = (state * a + c) & mask;
    out[i] = Number((state >> 33n) & 0xffn);
  }
  return out;
}

export function writePpm(path: string, width: number, height: number, pixels: Uint8Array): void {
  const header = Buffer.from(`P6\n${width} ${height}\n255\n`, 'ascii');
  writeFileSync(path, Buffer.concat([header, Buffer.from(pixels)]));
}

/** CIFAR-layout record -> interleaved RGB bytes. */
export function recordToInterleaved(record: Buffer): { label: number; pixels: Uint8Array } {
  const label = record[0];
  const planes = record.subarray(1);
  const pixels = new Uint8Array(32 * 32 * 3);
  for (let c = 0; c < 3; c++) {
    for (let i = 0; i < 1024; i++) {
      pixels[i * 3 + c] = planes[c * 1024 + i];
    }
  }
  return { label, pixels };
}

export interface CliRun {
  records: Buffer[];
  manifest: string;
}

/**
 * Run the engine CLI on a one-image source and return the output records.
 * This is the file-based reference path the buffer API must match.
 */
export function runCliAugment(
  preset: string,
  pixels: Uint8Array,
  seed: number,
  epochs = 1,
): CliRun {
  const work = mkdtempSync(join(tmpdir(), 'inaug-ts-'));
  const srcDir = join(work, 'src', 'c');
  mkdirSync(srcDir, { recursive: true });
  writePpm(join(srcDir, 'img.ppm'), 32, 32, pixels);
  const outDir = join(work, 'out');
  const overlay = join(work, 'io.toml');
  writeFileSync(
    overlay,
    [
      '[source]',
      'kind = "image_dir"',
      `root = "${join(work, 'src')}"`,
      '[sink]',
      `root = "${outDir}"`,
      'format = "cifar_record"',
      '[run]',
      `epochs = ${epochs}`,
    ].join('\n') + '\n',
  );
  execFileSync(
    PYTHON,
    ['-m', 'inaug.cli', 'augment', '--config', overlay, '--preset', preset, '--seed', String(seed)],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  const blob = readFileSync(join(outDir, 'records.bin'));
  if (blob.length % 3073 !== 0) {
    throw new Error(`records.bin has unexpected length ${blob.length}`);
  }
  const records: Buffer[] = [];
  for (let off = 0; off < blob.length; off += 3073) {
    records.push(blob.subarray(off, off + 3073));
  }
  return { records, manifest: readFileSync(join(outDir, 'manifest.tsv'), 'utf8') };
}

export const SHIPPED_PRESETS = [
  'cifar-wrn',
  'cifar-shakeshake',
  'cifar-x3',
  'imagenet-resnet50',
  'imagenet-effnet-b3',
];
