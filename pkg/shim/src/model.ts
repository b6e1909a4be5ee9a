/**
 * ONNX monocular depth inference on the wasm execution provider.
 *
 * The model is treated as opaque: one float32 image input (NCHW), one
 * float32 map output. If the model declares a static input size the image
 * is resampled to it; dynamic models get the image at a capped,
 * multiple-of-32 working size. The prediction is always resampled back to
 * the input dims, so callers never deal with model geometry.
 */

import * as fs from 'fs'
import * as ort from 'onnxruntime-web'
import { RgbImage } from './image'
import { resizeBilinear, resizeChw } from './resample'

export type Normalization = 'unit' | 'imagenet' | 'raw'

export interface ModelOptions {
  modelPath: string
  /** cap for the long side at dynamic input sizes */
  size: number
  norm: Normalization
}

const IMAGENET_MEAN = [0.485, 0.456, 0.406]
const IMAGENET_STD = [0.229, 0.224, 0.225]

// wasm backend: single-threaded for determinism, no worker proxy under Node
ort.env.wasm.numThreads = 1
ort.env.wasm.proxy = false

export async function loadSession(modelPath: string): Promise<ort.InferenceSession> {
  if (!fs.existsSync(modelPath)) {
    throw new Error(`model file ${modelPath} does not exist`)
  }
  const bytes = fs.readFileSync(modelPath)
  return ort.InferenceSession.create(new Uint8Array(bytes), {
    executionProviders: ['wasm'],
  })
}

function toChwFloat(image: RgbImage, norm: Normalization): Float32Array {
  const n = image.width * image.height
  const chw = new Float32Array(3 * n)
  for (let p = 0; p < n; p++) {
    for (let c = 0; c < 3; c++) {
      let v = image.rgb[p * 3 + c]
      if (norm === 'unit') v /= 255
      else if (norm === 'imagenet') v = (v / 255 - IMAGENET_MEAN[c]) / IMAGENET_STD[c]
      chw[c * n + p] = v
    }
  }
  return chw
}

interface StaticShape {
  height: number | null
  width: number | null
}

function declaredInputSize(session: ort.InferenceSession, inputName: string): StaticShape {
  // inputMetadata is present in current onnxruntime-web; fall back to dynamic
  const meta = (session as unknown as { inputMetadata?: Array<{ name: string; shape?: Array<number | string> }> })
    .inputMetadata
  const entry = meta?.find((m) => m.name === inputName)
  const shape = entry?.shape
  if (!shape || shape.length !== 4) return { height: null, width: null }
  const h = shape[2]
  const w = shape[3]
  return {
    height: typeof h === 'number' && h > 0 ? h : null,
    width: typeof w === 'number' && w > 0 ? w : null,
  }
}

function roundTo32(v: number): number {
  return Math.max(32, Math.round(v / 32) * 32)
}

function workingSize(image: RgbImage, declared: StaticShape, cap: number): { w: number; h: number } {
  if (declared.height && declared.width) {
    return { w: declared.width, h: declared.height }
  }
  let w = image.width
  let h = image.height
  const long = Math.max(w, h)
  if (long > cap) {
    const scale = cap / long
    w = Math.round(w * scale)
    h = Math.round(h * scale)
  }
  return { w: roundTo32(w), h: roundTo32(h) }
}

/** Run the model on one image; returns the raw prediction at image dims. */
export async function predictDepth(
  session: ort.InferenceSession,
  image: RgbImage,
  opts: Pick<ModelOptions, 'size' | 'norm'>,
): Promise<Float32Array> {
  const inputName = session.inputNames[0]
  const outputName = session.outputNames[0]
  if (!inputName || !outputName) {
    throw new Error('model exposes no input/output tensors')
  }
  const target = workingSize(image, declaredInputSize(session, inputName), opts.size)
  const chw = resizeChw(toChwFloat(image, opts.norm), 3, image.width, image.height, target.w, target.h)
  const tensor = new ort.Tensor('float32', chw, [1, 3, target.h, target.w])
  const outputs = await session.run({ [inputName]: tensor })
  const out = outputs[outputName]
  if (out.type !== 'float32') {
    throw new Error(`model output is ${out.type}, expected float32`)
  }
  const dims = out.dims.filter((d) => d !== 1)
  if (dims.length !== 2) {
    throw new Error(`model output dims [${out.dims.join(', ')}] are not a single map`)
  }
  const [oh, ow] = dims as [number, number]
  const data = out.data as Float32Array
  if (data.length !== oh * ow) {
    throw new Error('model output size does not match its dims')
  }
  return resizeBilinear(data, ow, oh, image.width, image.height)
}
