/**
 * File-exchange protocol pieces shared by the serve loop and the tests.
 *
 * A job is `{root}/{job_id}.json` listing PNG paths relative to the root,
 * written by the client only after all images are in place.  The answer is
 * `{root}/{job_id}.f32`: a little-endian (count: u32, dim: u32) header
 * followed by count rows of dim float32 values.  Failures produce
 * `{root}/{job_id}.err` with a one-line reason instead.  The client owns
 * cleanup of everything except the job file, which we consume.
 */

import { promises as fs } from 'node:fs'
import * as path from 'node:path'

export interface SidecarJob {
  jobId: string
  images: string[]
  dim: number
  model: string
}

export class ProtocolError extends Error {}

export function parseJob(text: string): SidecarJob {
  let doc: unknown
  try {
    doc = JSON.parse(text)
  } catch {
    throw new ProtocolError('job file is not valid JSON')
  }
  if (typeof doc !== 'object' || doc === null || Array.isArray(doc)) {
    throw new ProtocolError('job file must be a JSON object')
  }
  const d = doc as Record<string, unknown>
  if (typeof d.job_id !== 'string' || d.job_id.length === 0) {
    throw new ProtocolError('job_id must be a non-empty string')
  }
  if (!Array.isArray(d.images) || d.images.some(p => typeof p !== 'string')) {
    throw new ProtocolError('images must be an array of paths')
  }
  if (typeof d.dim !== 'number' || !Number.isInteger(d.dim) || d.dim < 1) {
    throw new ProtocolError(`dim must be a positive integer, got ${d.dim}`)
  }
  for (const rel of d.images as string[]) {
    // job files come from outside this process; keep reads inside the root
    if (path.isAbsolute(rel) || rel.split(/[\\/]/).includes('..')) {
      throw new ProtocolError(`image path escapes the exchange root: ${rel}`)
    }
  }
  return {
    jobId: d.job_id,
    images: d.images as string[],
    dim: d.dim,
    model: typeof d.model === 'string' ? d.model : 'generic',
  }
}

/** Pending job files, oldest name first; in-progress .tmp files are skipped. */
export async function listJobFiles(root: string): Promise<string[]> {
  let names: string[]
  try {
    names = await fs.readdir(root)
  } catch {
    return []
  }
  return names
    .filter(n => n.endsWith('.json'))
    .sort()
    .map(n => path.join(root, n))
}

export async function writeResponse(
  target: string,
  rows: Float32Array[],
  dim: number,
): Promise<void> {
  const buf = Buffer.alloc(8 + rows.length * dim * 4)
  buf.writeUInt32LE(rows.length, 0)
  buf.writeUInt32LE(dim, 4)
  let off = 8
  for (const row of rows) {
    if (row.length !== dim) {
      throw new ProtocolError(
        `row has ${row.length} values, header says ${dim}`,
      )
    }
    for (let i = 0; i < dim; i++) {
      buf.writeFloatLE(row[i] as number, off)
      off += 4
    }
  }
  // write-then-rename so the polling client never sees a partial file
  const tmp = target + '.tmp'
  await fs.writeFile(tmp, buf)
  await fs.rename(tmp, target)
}

export async function writeErrorFile(
  target: string,
  message: string,
): Promise<void> {
  const tmp = target + '.tmp'
  await fs.writeFile(tmp, message + '\n')
  await fs.rename(tmp, target)
}
