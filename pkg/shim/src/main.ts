/**
 * CLI entry: `node dist/src/main.js --input img.png --output pred.pfm
 * --model model.onnx [--device cpu] [--size 384] [--norm unit]`
 *
 * Reads one image, runs the monocular model, writes the raw
 * affine-ambiguous prediction as a little-endian PFM with dims equal to
 * the input image. Exits 0 on success, 1 with a message on stderr
 * otherwise.
 */

import * as fs from 'fs'
import * as path from 'path'
import { decodeImage } from './image'
import { loadSession, Normalization, predictDepth } from './model'
import { encodePfm } from './pfm'

interface Args {
  input: string
  output: string
  model: string
  device: string
  size: number
  norm: Normalization
}

const USAGE =
  'usage: main.js --input <image> --output <pfm> --model <onnx> ' +
  '[--device cpu|wasm] [--size N] [--norm unit|imagenet|raw]'

export function parseArgs(argv: string[]): Args {
  const args: Record<string, string> = {}
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i]
    const value = argv[i + 1]
    if (!flag.startsWith('--') || value === undefined) {
      throw new Error(USAGE)
    }
    args[flag.slice(2)] = value
  }
  for (const required of ['input', 'output', 'model']) {
    if (!(required in args)) throw new Error(`missing --${required}\n${USAGE}`)
  }
  const norm = args.norm ?? 'unit'
  if (!['unit', 'imagenet', 'raw'].includes(norm)) {
    throw new Error(`unknown --norm ${norm}`)
  }
  const size = args.size ? Number(args.size) : 384
  if (!Number.isInteger(size) || size < 32) {
    throw new Error(`--size must be an integer >= 32, got ${args.size}`)
  }
  return {
    input: args.input,
    output: args.output,
    model: args.model,
    device: args.device ?? 'cpu',
    size,
    norm: norm as Normalization,
  }
}

export async function run(argv: string[]): Promise<void> {
  const args = parseArgs(argv)
  if (!['cpu', 'wasm'].includes(args.device)) {
    console.error(`note: device ${args.device} not available, running on cpu/wasm`)
  }
  if (!fs.existsSync(args.input)) {
    throw new Error(`input image ${args.input} does not exist`)
  }
  const image = decodeImage(args.input)
  const session = await loadSession(args.model)
  const prediction = await predictDepth(session, image, { size: args.size, norm: args.norm })

  const pfm = encodePfm({ width: image.width, height: image.height, values: prediction })
  const tmp = path.join(
    path.dirname(path.resolve(args.output)),
    `.${path.basename(args.output)}.${process.pid}.tmp`,
  )
  fs.writeFileSync(tmp, pfm)
  fs.renameSync(tmp, args.output)
}

if (require.main === module) {
  run(process.argv.slice(2)).catch((err) => {
    console.error(`error: ${err instanceof Error ? err.message : err}`)
    process.exit(1)
  })
}
