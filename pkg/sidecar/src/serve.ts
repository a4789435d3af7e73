/**
 * The watch loop: one job in flight, oldest first.  A handled job is
 * either answered with a response file or failed with an error file;
 * both consume the job file so it is never picked up twice.
 */

import { promises as fs } from 'node:fs'
import * as path from 'node:path'

import { decodePng, EmbedderProfile } from './embedder.js'
import {
  listJobFiles,
  parseJob,
  ProtocolError,
  SidecarJob,
  writeErrorFile,
  writeResponse,
} from './protocol.js'

export interface ServeOptions {
  pollMs?: number
  /** Stop after handling this many jobs. */
  maxJobs?: number
  /** Stop after this long with nothing to do, in seconds. */
  idleTimeoutS?: number
}

const sleep = (ms: number) => new Promise(r => setTimeout(r, ms))

async function loadImages(root: string, job: SidecarJob) {
  const images = []
  for (const rel of job.images) {
    let data: Buffer
    try {
      data = await fs.readFile(path.join(root, rel))
    } catch {
      throw new ProtocolError(`cannot read image ${rel}`)
    }
    try {
      images.push(decodePng(data))
    } catch {
      throw new ProtocolError(`decode failed for image ${rel}`)
    }
  }
  return images
}

async function handleJob(
  root: string,
  jobFile: string,
  profile: EmbedderProfile,
): Promise<void> {
  const jobId = path.basename(jobFile, '.json')
  const fail = (message: string) =>
    writeErrorFile(path.join(root, jobId + '.err'), message)
  try {
    const job = parseJob(await fs.readFile(jobFile, 'utf8'))
    const images = await loadImages(root, job)
    if (profile.imageSize !== undefined) {
      for (let i = 0; i < images.length; i++) {
        const img = images[i]!
        if (img.width !== profile.imageSize || img.height !== profile.imageSize) {
          throw new ProtocolError(
            `image ${job.images[i]} is ${img.width}x${img.height}, ` +
              `${profile.name} needs ${profile.imageSize}x${profile.imageSize}`,
          )
        }
      }
    }
    const rows = profile.embedBatch(images, job.dim)
    if (rows.length !== images.length) {
      throw new ProtocolError(
        `profile returned ${rows.length} rows for ${images.length} images`,
      )
    }
    await writeResponse(path.join(root, job.jobId + '.f32'), rows, job.dim)
  } catch (e) {
    await fail(e instanceof Error ? e.message : String(e))
  } finally {
    await fs.unlink(jobFile).catch(() => {})
  }
}

/** Run until maxJobs handled or idleTimeoutS passes; returns jobs handled. */
export async function serve(
  root: string,
  profile: EmbedderProfile,
  options: ServeOptions = {},
): Promise<number> {
  const pollMs = options.pollMs ?? 50
  let handled = 0
  let idleSince = Date.now()
  for (;;) {
    if (options.maxJobs !== undefined && handled >= options.maxJobs) {
      return handled
    }
    const jobs = await listJobFiles(root)
    if (jobs.length === 0) {
      const idleS = (Date.now() - idleSince) / 1000
      if (options.idleTimeoutS !== undefined && idleS >= options.idleTimeoutS) {
        return handled
      }
      await sleep(pollMs)
      continue
    }
    await handleJob(root, jobs[0]!, profile)
    handled += 1
    idleSince = Date.now()
  }
}
