/**
 * Embedder profiles.  A profile turns a batch of decoded RGB images into
 * one row per image; the serve loop stays agnostic about where the
 * numbers come from.
 */

import { PNG } from 'pngjs'

import { ProtocolError } from './protocol.js'

export interface RgbImage {
  width: number
  height: number
  /** Packed RGB, row-major, 3 bytes per pixel. */
  rgb: Uint8Array
}

export interface EmbedderProfile {
  name: string
  /** Required input edge length in pixels, if any. */
  imageSize?: number
  embedBatch(images: RgbImage[], dim: number): Float32Array[]
}

export function decodePng(data: Buffer): RgbImage {
  const png = PNG.sync.read(data)
  const n = png.width * png.height
  const rgb = new Uint8Array(n * 3)
  for (let i = 0; i < n; i++) {
    rgb[i * 3] = png.data[i * 4] as number
    rgb[i * 3 + 1] = png.data[i * 4 + 1] as number
    rgb[i * 3 + 2] = png.data[i * 4 + 2] as number
  }
  return { width: png.width, height: png.height, rgb }
}

/**
 * Protocol-check mode: zero vectors at the requested width.  Lets the
 * client exercise job discovery, response framing and cleanup without
 * any model on this machine.
 */
export function echoProfile(): EmbedderProfile {
  return {
    name: 'echo',
    embedBatch(images, dim) {
      return images.map(() => new Float32Array(dim))
    },
  }
}

/**
 * The pretrained network profiles ship separately from this package;
 * selecting one without weights on disk is a startup error, not a
 * per-job one.
 */
export function modelProfile(name: string): EmbedderProfile {
  throw new ProtocolError(
    `model profile '${name}' needs local network weights; ` +
      'this build serves --mode echo only',
  )
}
