/**
 * CLI entry.
 *
 *   embed-sidecar --root EXCHANGE_DIR [--mode echo] [--max-jobs N]
 *                 [--idle-timeout SECONDS] [--poll-ms MS]
 *
 * Watches the exchange directory and answers embedding jobs.  The only
 * mode bundled here is `echo` (zero vectors, exact protocol framing);
 * the `generic` and `face` network profiles need weights installed
 * alongside and refuse to start without them.
 */

import { echoProfile, modelProfile } from './embedder.js'
import { ProtocolError } from './protocol.js'
import { serve } from './serve.js'

interface CliArgs {
  root: string
  mode: string
  maxJobs?: number
  idleTimeoutS?: number
  pollMs?: number
}

function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = { root: '', mode: 'echo' }
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i]
    const next = () => {
      i += 1
      const v = argv[i]
      if (v === undefined) throw new ProtocolError(`${flag} needs a value`)
      return v
    }
    const num = () => {
      const v = Number(next())
      if (!Number.isFinite(v) || v < 0) {
        throw new ProtocolError(`${flag} needs a non-negative number`)
      }
      return v
    }
    switch (flag) {
      case '--root':
        args.root = next()
        break
      case '--mode':
        args.mode = next()
        break
      case '--max-jobs':
        args.maxJobs = num()
        break
      case '--idle-timeout':
        args.idleTimeoutS = num()
        break
      case '--poll-ms':
        args.pollMs = num()
        break
      default:
        throw new ProtocolError(`unknown flag ${flag}`)
    }
  }
  if (!args.root) throw new ProtocolError('--root is required')
  return args
}

async function main(): Promise<number> {
  let args: CliArgs
  try {
    args = parseArgs(process.argv.slice(2))
  } catch (e) {
    console.error(`error: ${e instanceof Error ? e.message : e}`)
    return 2
  }
  let profile
  try {
    profile = args.mode === 'echo' ? echoProfile() : modelProfile(args.mode)
  } catch (e) {
    console.error(`error: ${e instanceof Error ? e.message : e}`)
    return 2
  }
  const handled = await serve(args.root, profile, {
    maxJobs: args.maxJobs,
    idleTimeoutS: args.idleTimeoutS,
    pollMs: args.pollMs,
  })
  console.log(`served ${handled} jobs`)
  return 0
}

main().then(
  code => process.exit(code),
  e => {
    console.error(`error: ${e instanceof Error ? e.message : e}`)
    process.exit(1)
  },
)
